"""Flat key=value run configuration shared by all CLI subcommands.

Precedence: built-in defaults, then the config file, then CLI flags.  Unknown
keys are rejected so typos fail loudly instead of silently training with a
default.  Defaults describe the desk-scale profile; full-scale runs override
batch_size/hidden_width via file or flags.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .data import DEFAULT_SEGMENTS, SkeletonPrior
from .gan import TrainConfig
from .topology import DEFAULT_TOPOLOGY


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    # synthetic data generation
    n_skeletons: int = 10000
    views_per_skeleton: int = 8
    train_fraction: float = 0.8
    val_fraction: float = 0.1
    test_fraction: float = 0.1
    jitter_std: float = 0.0
    symmetry_coupling: float = 1.0
    scale_min: float = 0.9
    scale_max: float = 1.1
    # camera model
    distance: float = 10.0
    azimuth_min: float = 0.0
    azimuth_max: float = 360.0
    elevation_min: float = 0.0
    elevation_max: float = 20.0
    # training
    batch_size: int = 256
    steps: int = 20000
    learning_rate: float = 2e-4
    hidden_width: int = 256
    gen_blocks: int = 4
    disc_blocks: int = 3
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    disc_steps_per_gen_step: int = 1
    generator_loss_variant: str = "non_saturating"
    checkpoint_every: int = 2000
    sequential: bool = False
    # evaluation
    unit_scale_mm: float = 900.0

    def __post_init__(self) -> None:
        for name in ("train_fraction", "val_fraction", "test_fraction"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        total = self.train_fraction + self.val_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {total}")
        if self.n_skeletons < 1 or self.views_per_skeleton < 1:
            raise ConfigError("n_skeletons and views_per_skeleton must be >= 1")
        if self.jitter_std < 0.0:
            raise ConfigError("jitter_std must be >= 0")
        if self.unit_scale_mm <= 0.0:
            raise ConfigError("unit_scale_mm must be positive")


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str):
    ftype = _FIELDS[key].type
    raw = raw.strip()
    try:
        if ftype == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; '#' starts a comment, blanks are skipped."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text, source=path)


def make_run_config(file_values: dict | None = None,
                    overrides: dict | None = None) -> RunConfig:
    merged: dict = {}
    merged.update(file_values or {})
    merged.update(overrides or {})
    unknown = [k for k in merged if k not in _FIELDS]
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged)


def echo_config(cfg: RunConfig) -> str:
    """Canonical one-key-per-line rendering of the effective config."""
    lines = []
    for name in sorted(_FIELDS):
        value = getattr(cfg, name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


def to_train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        batch_size=cfg.batch_size,
        steps=cfg.steps,
        learning_rate=cfg.learning_rate,
        adam_beta1=cfg.adam_beta1,
        adam_beta2=cfg.adam_beta2,
        adam_eps=cfg.adam_eps,
        distance=cfg.distance,
        hidden_width=cfg.hidden_width,
        gen_blocks=cfg.gen_blocks,
        disc_blocks=cfg.disc_blocks,
        bn_momentum=cfg.bn_momentum,
        bn_eps=cfg.bn_eps,
        disc_steps_per_gen_step=cfg.disc_steps_per_gen_step,
        generator_loss_variant=cfg.generator_loss_variant,
        azimuth_range=(cfg.azimuth_min, cfg.azimuth_max),
        elevation_range=(cfg.elevation_min, cfg.elevation_max),
        seed=cfg.seed,
        checkpoint_every=cfg.checkpoint_every,
        sequential=cfg.sequential,
    )


def to_prior(cfg: RunConfig) -> SkeletonPrior:
    return SkeletonPrior(
        topology=DEFAULT_TOPOLOGY,
        segments=dict(DEFAULT_SEGMENTS),
        symmetry_coupling=cfg.symmetry_coupling,
        scale_range=(cfg.scale_min, cfg.scale_max),
    )
