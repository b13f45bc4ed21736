"""Command line entry points: gen-data, train, lift, eval, baseline.

Every command takes an optional ``--config FILE`` of key=value pairs plus
flag overrides, echoes the effective configuration into its output directory,
and records git-blob sha1 hashes of its file inputs.  Exit codes: 0 success,
1 runtime failure (training abort, degenerate data), 2 usage or config error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import data as data_mod
from . import evaluate as eval_mod
from .config import (ConfigError, RunConfig, echo_config, load_config_file,
                     make_run_config, parse_config_text, to_prior,
                     to_train_config)
from .gan import (DegenerateDataError, NormStats, TrainingError,
                  apply_norm_stats, lift, load_train_state, normalize,
                  setup_train_state, train)
from .geometry import GeometryError, LiftConfig
from .topology import DEFAULT_TOPOLOGY


class UsageError(Exception):
    """Bad invocation: missing files, malformed flags. Exit code 2."""


def git_blob_sha1(path: str) -> str:
    """sha1 of ``blob <size>\\0<content>``, matching git hash-object."""
    with open(path, "rb") as fh:
        content = fh.read()
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(content))
    h.update(content)
    return h.hexdigest()


def _record_inputs(out_dir: str, paths: list[str]) -> None:
    lines = []
    for path in dict.fromkeys(paths):
        if os.path.isdir(path):
            for name in sorted(os.listdir(path)):
                sub = os.path.join(path, name)
                if os.path.isfile(sub):
                    lines.append(f"{git_blob_sha1(sub)}  {sub}")
        elif os.path.isfile(path):
            lines.append(f"{git_blob_sha1(path)}  {path}")
    with open(os.path.join(out_dir, "inputs.sha1"), "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def _write_echo(out_dir: str, cfg: RunConfig) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.echo"), "w") as fh:
        fh.write(echo_config(cfg))


def _require_file(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise UsageError(f"{what} not found: {path}")
    return path


def _require_dir(path: str, what: str) -> str:
    if not os.path.isdir(path):
        raise UsageError(f"{what} not found: {path}")
    return path


_OVERRIDE_FLAGS = (
    ("seed", int), ("steps", int), ("batch_size", int), ("hidden_width", int),
    ("n_skeletons", int), ("views_per_skeleton", int),
    ("learning_rate", float), ("checkpoint_every", int),
    ("jitter_std", float), ("unit_scale_mm", float),
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    for name, ftype in _OVERRIDE_FLAGS:
        parser.add_argument("--" + name.replace("_", "-"), type=ftype,
                            default=None, help=f"override config key {name}")
    parser.add_argument("--sequential", action="store_true", default=None,
                        help="byte-stable telemetry (wall_ms logged as 0)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    file_values = {}
    if args.config is not None:
        _require_file(args.config, "config file")
        file_values = load_config_file(args.config)
    overrides: dict = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides.update(parse_config_text(item, source="--set"))
    for name, _ in _OVERRIDE_FLAGS:
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.sequential:
        overrides["sequential"] = True
    return make_run_config(file_values, overrides)


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = _build_run_config(args)
    prior = to_prior(cfg)
    lift_cfg = LiftConfig(distance=cfg.distance)
    ds = data_mod.generate_dataset(
        prior, cfg.n_skeletons, cfg.seed,
        views_per_skeleton=cfg.views_per_skeleton, cfg=lift_cfg,
        azimuth_range=(cfg.azimuth_min, cfg.azimuth_max),
        elevation_range=(cfg.elevation_min, cfg.elevation_max),
        jitter_std=cfg.jitter_std)
    splits = data_mod.split_dataset(
        ds, (cfg.train_fraction, cfg.val_fraction, cfg.test_fraction),
        cfg.seed)
    os.makedirs(args.out, exist_ok=True)
    _write_echo(args.out, cfg)
    for name, part in zip(("train", "val", "test"), splits):
        data_mod.save_dataset(part, os.path.join(args.out, name))
        print(f"{name}: {len(part)} poses "
              f"({len(np.unique(part.group_ids))} skeletons)")
    _record_inputs(args.out, [args.config] if args.config else [])
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _build_run_config(args)
    _require_dir(args.data, "data directory")
    real_path = _require_file(os.path.join(args.data, "train_2d.csv"),
                              "training pose file")
    gen_input_path = real_path
    if args.gen_input_csv is not None:
        gen_input_path = _require_file(args.gen_input_csv,
                                       "generator input file")
    topo = DEFAULT_TOPOLOGY
    real_raw, _ = data_mod.load_poses_csv(real_path, topo.num_joints)
    train_cfg = to_train_config(cfg)
    real_norm, stats = normalize(real_raw, topo, train_cfg)
    if gen_input_path == real_path:
        gen_norm = real_norm
    else:
        gen_raw, _ = data_mod.load_poses_csv(gen_input_path, topo.num_joints)
        gen_norm = apply_norm_stats(gen_raw, topo, stats)
    run_dir = args.run_dir
    _write_echo(run_dir, cfg)
    _record_inputs(run_dir, [p for p in (args.config, real_path,
                                         gen_input_path) if p])
    with open(os.path.join(run_dir, "normstats.json"), "w") as fh:
        json.dump(stats.to_dict(), fh)
        fh.write("\n")
    if args.resume is not None:
        state = load_train_state(_require_dir(args.resume, "checkpoint"), topo)
        if train_cfg.steps != state.cfg.steps:
            state.cfg = dataclasses.replace(state.cfg, steps=train_cfg.steps)
    else:
        state = setup_train_state(train_cfg, stats, topo)
    state = train(state, real_norm, gen_norm, run_dir=run_dir)
    final = os.path.join(run_dir, "checkpoints", f"step_{state.step:06d}")
    print(f"trained {state.step} steps; final checkpoint: {final}")
    return 0


def _load_generator(path: str):
    state = load_train_state(path, DEFAULT_TOPOLOGY)
    return state.gen, state.norm_stats, state.cfg


def cmd_lift(args: argparse.Namespace) -> int:
    _require_dir(args.checkpoint, "checkpoint")
    _require_file(args.input, "input pose file")
    gen, stats, train_cfg = _load_generator(args.checkpoint)
    topo = DEFAULT_TOPOLOGY
    poses_raw, labels = data_mod.load_poses_csv(args.input, topo.num_joints)
    if poses_raw.shape[0] == 0:
        raise DegenerateDataError("input file holds no poses")
    normed = apply_norm_stats(poses_raw, topo, stats)
    pred = lift(gen, normed, train_cfg, training=False)
    data_mod.save_poses_csv(args.output, pred, labels)
    print(f"lifted {pred.shape[0]} poses -> {args.output}")
    return 0


def _eval_predictions(args: argparse.Namespace, cfg: RunConfig):
    topo = DEFAULT_TOPOLOGY
    gt, labels = data_mod.load_poses_csv(
        _require_file(args.test_3d, "3D ground truth"), topo.num_joints)
    if gt.shape[0] == 0:
        raise DegenerateDataError("evaluation set is empty")
    sources = [s for s in ("pred_3d", "checkpoint", "ensemble", "baseline")
               if getattr(args, s, None)]
    if len(sources) != 1:
        raise UsageError(
            "choose exactly one of --pred-3d, --checkpoint, --ensemble, "
            "--baseline")
    mode = sources[0]
    inputs: list[str] = [args.test_3d]
    if mode == "pred_3d":
        pred, pred_labels = data_mod.load_poses_csv(
            _require_file(args.pred_3d, "predicted 3D file"), topo.num_joints)
        if labels is None:
            labels = pred_labels
        inputs.append(args.pred_3d)
        return pred, gt, labels, inputs, "pred:" + args.pred_3d
    test2d_path = _require_file(args.test_2d, "2D test file")
    poses2d, labels_2d = data_mod.load_poses_csv(test2d_path, topo.num_joints)
    if poses2d.shape[0] != gt.shape[0]:
        raise DegenerateDataError(
            f"2D file has {poses2d.shape[0]} poses, 3D has {gt.shape[0]}")
    if labels is None:
        labels = labels_2d
    inputs.append(test2d_path)
    if mode == "baseline":
        normed, _ = normalize(poses2d, topo, LiftConfig(cfg.distance))
        pred = eval_mod.flat_baseline(normed, LiftConfig(cfg.distance))
        return pred, gt, labels, inputs, "baseline"
    if mode == "checkpoint":
        ckpt_dirs = [args.checkpoint]
    else:
        ckpt_dirs = list(args.ensemble)
    gens = []
    stats_list = []
    for path in ckpt_dirs:
        gen, stats, train_cfg = _load_generator(_require_dir(path, "checkpoint"))
        gens.append(gen)
        stats_list.append(stats)
        inputs.append(path)
    if len({s.topology_name for s in stats_list}) != 1:
        raise UsageError("ensemble members were trained on different topologies")
    if len({s.scale for s in stats_list}) != 1:
        raise UsageError("ensemble members disagree on normalization scale")
    normed = apply_norm_stats(poses2d, topo, stats_list[0])
    pred = eval_mod.ensemble_lift(gens, normed,
                                  LiftConfig(stats_list[0].distance))
    tag = "ensemble" if mode == "ensemble" else "ckpt:" + ckpt_dirs[0]
    return pred, gt, labels, inputs, tag


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _build_run_config(args)
    pred, gt, labels, inputs, tag = _eval_predictions(args, cfg)
    report = eval_mod.mpjpe(pred, gt, labels, cfg.unit_scale_mm)
    print(f"source: {tag}")
    print("class,count,mpjpe_mm")
    for name, count, value in report.rows():
        print(f"{name},{count},{value:.3f}")
    if args.out is not None:
        out_dir = os.path.dirname(args.out)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        eval_mod.write_report_csv(report, args.out)
    if args.run_dir is not None:
        _write_echo(args.run_dir, cfg)
        eval_mod.write_report_csv(report,
                                  os.path.join(args.run_dir, "report.csv"))
        _record_inputs(args.run_dir, inputs + ([args.config] if args.config else []))
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    args.pred_3d = None
    args.checkpoint = None
    args.ensemble = None
    args.baseline = True
    return cmd_eval(args)


def cmd_select(args: argparse.Namespace) -> int:
    cfg = _build_run_config(args)
    run_dir = _require_dir(args.run_dir, "run directory")
    ckpt_root = _require_dir(os.path.join(run_dir, "checkpoints"),
                             "checkpoint directory")
    names = sorted(d for d in os.listdir(ckpt_root)
                   if os.path.isdir(os.path.join(ckpt_root, d)))
    if not names:
        raise UsageError(f"no checkpoints under {ckpt_root}")
    topo = DEFAULT_TOPOLOGY
    gens = []
    for name in names:
        gen, stats, _ = _load_generator(os.path.join(ckpt_root, name))
        gens.append((name, gen))
    val_norm = val_3d = None
    if args.val_2d is not None or args.val_3d is not None:
        if args.val_2d is None or args.val_3d is None:
            raise UsageError("--val-2d and --val-3d go together")
        val_raw, _ = data_mod.load_poses_csv(
            _require_file(args.val_2d, "2D validation file"), topo.num_joints)
        val_3d, _ = data_mod.load_poses_csv(
            _require_file(args.val_3d, "3D validation file"), topo.num_joints)
        if val_raw.shape[0] != val_3d.shape[0]:
            raise DegenerateDataError(
                f"2D file has {val_raw.shape[0]} poses, 3D has {val_3d.shape[0]}")
        val_norm = apply_norm_stats(val_raw, topo, stats)
    best, scores = eval_mod.select_best(
        gens, val_norm, val_3d, LiftConfig(stats.distance), cfg.unit_scale_mm)
    for name in names:
        if name in scores:
            marker = " *" if name == best else ""
            print(f"{name}: {scores[name]:.3f}mm{marker}")
    print(os.path.join(ckpt_root, best))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poselift",
        description="Weakly supervised 2D-to-3D pose lifting")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="sample a synthetic pose corpus")
    p.add_argument("--out", required=True, help="output dataset directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="adversarial training on 2D poses")
    p.add_argument("--data", required=True,
                   help="dataset directory from gen-data")
    p.add_argument("--run-dir", required=True, help="output run directory")
    p.add_argument("--gen-input-csv", default=None,
                   help="separate 2D pool for generator inputs")
    p.add_argument("--resume", default=None,
                   help="checkpoint directory to resume from")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("lift", help="lift a 2D pose file with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="2D pose CSV")
    p.add_argument("--output", required=True, help="3D pose CSV to write")
    _add_config_flags(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("eval", help="MPJPE report against 3D ground truth")
    p.add_argument("--test-2d", default=None, help="2D test pose CSV")
    p.add_argument("--test-3d", required=True, help="3D ground truth CSV")
    p.add_argument("--pred-3d", default=None, help="pre-lifted 3D CSV")
    p.add_argument("--checkpoint", default=None, help="checkpoint directory")
    p.add_argument("--ensemble", nargs="+", default=None,
                   help="average several checkpoints")
    p.add_argument("--baseline", action="store_true",
                   help="score the zero-offset flat baseline")
    p.add_argument("--out", default=None, help="write report CSV here")
    p.add_argument("--run-dir", default=None,
                   help="also write report + config echo into a run directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline",
                       help="score the flat baseline (eval --baseline)")
    p.add_argument("--test-2d", required=True)
    p.add_argument("--test-3d", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--run-dir", default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser(
        "select",
        help="pick a checkpoint from a run: best val MPJPE, else the last")
    p.add_argument("--run-dir", required=True,
                   help="training run directory with checkpoints/")
    p.add_argument("--val-2d", default=None, help="2D validation CSV")
    p.add_argument("--val-3d", default=None, help="3D validation CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_select)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, DegenerateDataError, GeometryError,
            data_mod.DatasetError, eval_mod.EvalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
