"""Checkpoint I/O: a JSON manifest next to a raw float64 parameter blob.

A checkpoint is a directory holding ``manifest.json`` (hyperparameters, step
counter, RNG state, and an ordered array table of name/shape/offset entries)
and ``params.bin`` (the arrays' bytes, little-endian float64, concatenated in
table order).  Round trips are bitwise lossless, so a resumed or reloaded run
continues exactly.
"""
from __future__ import annotations

import json
import os

import numpy as np

MANIFEST_NAME = "manifest.json"
ARRAYS_NAME = "params.bin"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(path: str, meta: dict,
                    arrays: list[tuple[str, np.ndarray]]) -> None:
    os.makedirs(path, exist_ok=True)
    table = []
    offset = 0
    chunks = []
    names = set()
    for name, arr in arrays:
        if name in names:
            raise CheckpointError(f"duplicate array name {name!r}")
        names.add(name)
        a = np.ascontiguousarray(arr, dtype="<f8")
        chunks.append(a.tobytes())
        table.append({"name": name, "shape": list(a.shape), "offset": offset})
        offset += a.nbytes
    manifest = {
        "format_version": FORMAT_VERSION,
        "dtype": "<f8",
        "total_bytes": offset,
        "meta": meta,
        "arrays": table,
    }
    with open(os.path.join(path, MANIFEST_NAME), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(path, ARRAYS_NAME), "wb") as fh:
        for chunk in chunks:
            fh.write(chunk)


def load_checkpoint(path: str) -> tuple[dict, dict[str, np.ndarray]]:
    manifest_path = os.path.join(path, MANIFEST_NAME)
    arrays_path = os.path.join(path, ARRAYS_NAME)
    if not os.path.isfile(manifest_path) or not os.path.isfile(arrays_path):
        raise CheckpointError(f"{path} is not a checkpoint directory")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {manifest.get('format_version')}")
    blob = open(arrays_path, "rb").read()
    if len(blob) != manifest["total_bytes"]:
        raise CheckpointError(
            f"parameter blob is {len(blob)} bytes, manifest says "
            f"{manifest['total_bytes']}")
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(
            blob, dtype="<f8", count=count, offset=entry["offset"]
        ).reshape(shape)
        arrays[entry["name"]] = arr.astype(np.float64)
    return manifest["meta"], arrays


def rng_state_to_json(rng: np.random.Generator) -> dict:
    """PCG64 state as JSON-safe strings (the ints exceed 64 bits)."""
    st = rng.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "state": str(st["state"]["state"]),
        "inc": str(st["state"]["inc"]),
        "has_uint32": int(st["has_uint32"]),
        "uinteger": int(st["uinteger"]),
    }


def rng_state_from_json(blob: dict) -> np.random.Generator:
    if blob["bit_generator"] != "PCG64":
        raise CheckpointError(f"unsupported bit generator {blob['bit_generator']}")
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": int(blob["state"]), "inc": int(blob["inc"])},
        "has_uint32": int(blob["has_uint32"]),
        "uinteger": int(blob["uinteger"]),
    }
    return rng
