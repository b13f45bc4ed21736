"""Adversarial training of the lifting generator against random re-projections.

The generator never sees 3D supervision: it lifts a normalized 2D pose to 3D,
the lifted skeleton is rotated by a random camera and re-projected, and the
discriminator scores whether the synthetic view looks like a pose from the
real 2D pool.  Real and generator-input pools are shuffled independently, so
no pairing between them is ever assumed.

Update order per step: discriminator first (real batch, then freshly rotated
fakes), then the generator through the frozen-for-this-step discriminator
with newly drawn rotations.  All randomness flows through one PCG64 stream in
a fixed order, so runs are bitwise reproducible and checkpoints can resume
exactly.
"""
from __future__ import annotations

import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .adam import Adam, OptimizerError
from .checkpoint import (load_checkpoint, rng_state_from_json,
                         rng_state_to_json, save_checkpoint)
from .geometry import (GeometryError, LiftConfig, back_project,
                       back_project_backward, depth_from_offset,
                       depth_from_offset_backward, perspective_project,
                       perspective_project_backward, rotate_about_pivot,
                       rotate_about_pivot_backward, rotation_matrices)
from .layers import softmax_cross_entropy
from .networks import (ResidualMLP, init_parameters, make_discriminator,
                       make_generator)
from .topology import DEFAULT_TOPOLOGY, SkeletonTopology

REAL_LABEL = 1
FAKE_LABEL = 0

TELEMETRY_COLUMNS = (
    "step", "disc_loss", "gen_loss", "disc_acc_real", "disc_acc_fake",
    "wall_ms",
)


class TrainingError(RuntimeError):
    pass


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for adversarial lifting.

    Defaults are the full-scale settings; desk-scale runs override
    batch_size/hidden_width/steps.  ``sequential`` keeps the math identical
    but logs wall_ms as 0 so telemetry files are byte-stable across runs.
    """

    batch_size: int = 32768
    steps: int = 20000
    learning_rate: float = 2e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    distance: float = 10.0
    hidden_width: int = 1024
    gen_blocks: int = 4
    disc_blocks: int = 3
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5
    disc_steps_per_gen_step: int = 1
    generator_loss_variant: str = "non_saturating"
    azimuth_range: tuple[float, float] = (0.0, 360.0)
    elevation_range: tuple[float, float] = (0.0, 20.0)
    seed: int = 0
    checkpoint_every: int = 0
    sequential: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (BatchNorm statistics)")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.distance <= 1.0:
            raise ValueError("distance must exceed the depth floor of 1")
        if self.hidden_width < 1 or self.gen_blocks < 0 or self.disc_blocks < 0:
            raise ValueError("invalid network size")
        if self.disc_steps_per_gen_step < 1:
            raise ValueError("disc_steps_per_gen_step must be >= 1")
        if self.generator_loss_variant not in ("non_saturating", "minimax"):
            raise ValueError(
                f"unknown generator_loss_variant {self.generator_loss_variant!r}")
        for lo, hi in (self.azimuth_range, self.elevation_range):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ValueError("angle ranges must be finite with lo <= hi")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")

    @property
    def lift_config(self) -> LiftConfig:
        return LiftConfig(distance=self.distance)

    @staticmethod
    def from_dict(blob: dict) -> "TrainConfig":
        blob = dict(blob)
        for key in ("azimuth_range", "elevation_range"):
            if key in blob:
                blob[key] = tuple(blob[key])
        return TrainConfig(**blob)


@dataclass(frozen=True)
class NormStats:
    """Normalization constants frozen at training time and reused at test time."""

    scale: float
    distance: float
    topology_name: str

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(blob: dict) -> "NormStats":
        return NormStats(float(blob["scale"]), float(blob["distance"]),
                         str(blob["topology_name"]))


def normalize(poses, topology: SkeletonTopology, cfg: TrainConfig | LiftConfig):
    """Root-center each pose and scale the whole set to camera units.

    One global scale is chosen so the mean 2D head-to-root distance becomes
    1/d, the size a unit-height skeleton at depth d projects to.  Returns the
    normalized poses and the NormStats needed to reproduce the mapping.
    """
    distance = cfg.distance
    x = np.asarray(poses, dtype=np.float64)
    if x.ndim != 3 or x.shape[1:] != (topology.num_joints, 2):
        raise ValueError(f"expected (N, {topology.num_joints}, 2), got {x.shape}")
    if x.shape[0] < 1:
        raise DegenerateDataError("cannot normalize an empty pose set")
    if not np.all(np.isfinite(x)):
        raise DegenerateDataError("poses contain non-finite values")
    centered = topology.root_center(x)
    head = centered[:, topology.head_index, :]
    mean_dist = float(np.mean(np.linalg.norm(head, axis=1)))
    if mean_dist < 1e-12:
        raise DegenerateDataError(
            "degenerate pose set: zero mean head-to-root distance")
    scale = (1.0 / distance) / mean_dist
    stats = NormStats(scale=scale, distance=float(distance),
                      topology_name=topology.name)
    return centered * scale, stats


def apply_norm_stats(poses, topology: SkeletonTopology,
                     stats: NormStats) -> np.ndarray:
    """Center and scale new poses with stats frozen from the training set."""
    if topology.name != stats.topology_name:
        raise ValueError(
            f"stats were computed for topology {stats.topology_name!r}, "
            f"got {topology.name!r}")
    x = np.asarray(poses, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DegenerateDataError("poses contain non-finite values")
    return topology.root_center(x) * stats.scale


def lift(gen: ResidualMLP, poses, cfg: TrainConfig | LiftConfig,
         training: bool = False) -> np.ndarray:
    """Lift normalized 2D poses to camera-frame 3D skeletons (B, J, 3)."""
    x = np.asarray(poses, dtype=np.float64)
    num_joints = gen.out_dim
    if x.ndim == 3:
        x = x.reshape(x.shape[0], -1)
    offsets = gen.forward(x, training)
    lc = cfg if isinstance(cfg, LiftConfig) else cfg.lift_config
    z, _ = depth_from_offset(offsets, lc)
    return back_project(x.reshape(-1, num_joints, 2), z)


def random_project(skeletons, rng: np.random.Generator, cfg: TrainConfig,
                   rotations: np.ndarray | None = None):
    """Re-project 3D skeletons through per-sample random cameras.

    Draws azimuth/elevation uniformly from the configured ranges unless
    explicit ``rotations`` (B, 3, 3) are supplied.  Returns the 2D views and
    the rotation matrices actually used.
    """
    sk = np.asarray(skeletons, dtype=np.float64)
    if sk.ndim != 3 or sk.shape[-1] != 3:
        raise ValueError(f"expected (B, J, 3), got {sk.shape}")
    if rotations is None:
        az = rng.uniform(*cfg.azimuth_range, size=sk.shape[0])
        el = rng.uniform(*cfg.elevation_range, size=sk.shape[0])
        rotations = rotation_matrices(az, el)
    rotated, _ = rotate_about_pivot(sk, rotations, cfg.lift_config)
    return perspective_project(rotated), rotations


def gan_loss(d_real, d_fake, variant: str = "non_saturating"):
    """Standard GAN objective from discriminator probabilities.

    disc_loss = -mean log d_real - mean log(1 - d_fake); the generator either
    maximizes log d_fake (non-saturating, the default) or minimizes
    log(1 - d_fake) (minimax).  Probabilities are clamped away from {0, 1}
    before the logs.
    """
    r = np.clip(np.asarray(d_real, dtype=np.float64), 1e-12, 1.0 - 1e-12)
    f = np.clip(np.asarray(d_fake, dtype=np.float64), 1e-12, 1.0 - 1e-12)
    disc_loss = float(-np.mean(np.log(r)) - np.mean(np.log1p(-f)))
    if variant == "non_saturating":
        gen_loss = float(-np.mean(np.log(f)))
    elif variant == "minimax":
        gen_loss = float(np.mean(np.log1p(-f)))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return disc_loss, gen_loss


class _Sampler:
    """Without-replacement minibatch stream over one dataset."""

    def __init__(self, n: int, perm: np.ndarray | None = None, cursor: int = 0):
        self.n = n
        self.perm = perm
        self.cursor = cursor

    def next_batch(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        if batch > self.n:
            raise TrainingError(
                f"dataset of {self.n} poses is smaller than batch_size {batch}")
        if self.perm is None or self.cursor + batch > self.n:
            self.perm = rng.permutation(self.n)
            self.cursor = 0
        idx = self.perm[self.cursor:self.cursor + batch]
        self.cursor += batch
        return idx


@dataclass
class TrainState:
    cfg: TrainConfig
    topology: SkeletonTopology
    norm_stats: NormStats
    gen: ResidualMLP
    disc: ResidualMLP
    adam_gen: Adam
    adam_disc: Adam
    rng: np.random.Generator
    step: int = 0
    real_sampler: _Sampler | None = None
    gen_sampler: _Sampler | None = None
    telemetry: list = field(default_factory=list)
    run_dir: str | None = None


def setup_train_state(cfg: TrainConfig, norm_stats: NormStats,
                      topology: SkeletonTopology = DEFAULT_TOPOLOGY) -> TrainState:
    """Fresh nets, optimizers and RNG stream for a training run.

    Generator and discriminator are initialized from distinct substreams of
    the run seed so their weights are independent but reproducible.
    """
    j = topology.num_joints
    gen = make_generator(j, cfg.hidden_width, cfg.gen_blocks,
                         momentum=cfg.bn_momentum, eps=cfg.bn_eps)
    disc = make_discriminator(j, cfg.hidden_width, cfg.disc_blocks,
                              momentum=cfg.bn_momentum, eps=cfg.bn_eps)
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    init_parameters(gen, seeds[0])
    init_parameters(disc, seeds[1])
    adam_kwargs = dict(lr=cfg.learning_rate, beta1=cfg.adam_beta1,
                       beta2=cfg.adam_beta2, eps=cfg.adam_eps)
    return TrainState(
        cfg=cfg,
        topology=topology,
        norm_stats=norm_stats,
        gen=gen,
        disc=disc,
        adam_gen=Adam(gen.parameters(), **adam_kwargs),
        adam_disc=Adam(disc.parameters(), **adam_kwargs),
        rng=np.random.Generator(np.random.PCG64(cfg.seed)),
    )


def _gen_loss_from_logits(fake_logits, variant: str):
    b = fake_logits.shape[0]
    if variant == "non_saturating":
        # maximize log d_fake == cross-entropy against the real label
        return softmax_cross_entropy(
            fake_logits, np.full(b, REAL_LABEL, dtype=np.int64))[:2]
    loss, d_logits, _ = softmax_cross_entropy(
        fake_logits, np.full(b, FAKE_LABEL, dtype=np.int64))
    return -loss, -d_logits


def _lift_batch(state: TrainState, gen_inputs: np.ndarray):
    """Generator forward in training mode, keeping every backward cache."""
    flat = gen_inputs.reshape(gen_inputs.shape[0], -1)
    offsets = state.gen.forward(flat, True)
    z, z_active = depth_from_offset(offsets, state.cfg.lift_config)
    skel = back_project(gen_inputs, z)
    return skel, (gen_inputs, z, z_active)


def _project_fresh(state: TrainState, skel: np.ndarray):
    """Re-project lifted skeletons through newly drawn random cameras."""
    cfg = state.cfg
    az = state.rng.uniform(*cfg.azimuth_range, size=skel.shape[0])
    el = state.rng.uniform(*cfg.elevation_range, size=skel.shape[0])
    rot = rotation_matrices(az, el)
    rotated, unclamped = rotate_about_pivot(skel, rot, cfg.lift_config)
    return perspective_project(rotated), (rot, rotated, unclamped)


def _backprop_fakes(state: TrainState, d_fakes, proj_cache, lift_cache) -> None:
    rot, rotated, unclamped = proj_cache
    gen_inputs, z, z_active = lift_cache
    d_points = perspective_project_backward(d_fakes, rotated)
    d_skel = rotate_about_pivot_backward(d_points, rot, unclamped)
    _, d_z = back_project_backward(d_skel, gen_inputs, z)
    d_offsets = depth_from_offset_backward(d_z, z_active)
    state.gen.backward(d_offsets)


def _disc_update(state: TrainState, real, gen_in, skel=None):
    """Discriminator step on a real batch plus freshly re-projected fakes.

    Reals and fakes go through one concatenated forward pass so BatchNorm
    statistics are pooled across both halves; with per-class passes the
    discriminator can read the batch label straight out of its own
    normalization instead of learning per-sample features, which shows up as
    perfect train-mode accuracy with chance-level inference accuracy.  The
    loss keeps the two-term form (mean over reals plus mean over fakes), so
    each half's upstream gradient is scaled by its own size.  ``skel`` lets
    the caller reuse an already lifted batch; otherwise the generator is
    forwarded here.
    """
    if skel is None:
        skel, _ = _lift_batch(state, gen_in)
    state.disc.zero_grad()
    fakes, _ = _project_fresh(state, skel)
    nr = real.shape[0]
    both = np.concatenate(
        [real.reshape(nr, -1), fakes.reshape(fakes.shape[0], -1)])
    logits = state.disc.forward(both, True)
    loss_r, d_real, probs_r = softmax_cross_entropy(
        logits[:nr], np.full(nr, REAL_LABEL, dtype=np.int64))
    loss_f, d_fake, probs_f = softmax_cross_entropy(
        logits[nr:], np.full(fakes.shape[0], FAKE_LABEL, dtype=np.int64))
    state.disc.backward(np.concatenate([d_real, d_fake]))
    disc_loss = loss_r + loss_f
    if not np.isfinite(disc_loss):
        _dump_diagnostics(state, real, gen_in, disc_loss, None)
    try:
        state.adam_disc.step()
    except OptimizerError as exc:
        _dump_diagnostics(state, real, gen_in, disc_loss, None,
                          reason=str(exc))
    acc_real = float(np.mean(probs_r[:, REAL_LABEL] > 0.5))
    acc_fake = float(np.mean(probs_f[:, REAL_LABEL] < 0.5))
    return disc_loss, acc_real, acc_fake


def _gen_update(state: TrainState, gen_in, skel, lift_cache) -> float:
    """Generator step through the (weight-frozen) discriminator.

    Uses the lifted batch from this step's single generator forward; only the
    camera rotations are redrawn.  The discriminator runs in inference mode:
    scoring an all-fake batch against its own batch statistics would couple
    the samples and hand the generator a gradient toward whatever recenters
    the batch rather than whatever makes each pose real, so the fakes are
    scored against the running statistics accumulated from the mixed batches
    of the discriminator updates.
    """
    fakes, proj_cache = _project_fresh(state, skel)
    gen_logits = state.disc.forward(fakes.reshape(fakes.shape[0], -1), False)
    gen_loss, d_logits = _gen_loss_from_logits(
        gen_logits, state.cfg.generator_loss_variant)
    if not np.isfinite(gen_loss):
        _dump_diagnostics(state, None, gen_in, None, gen_loss)
    state.gen.zero_grad()
    d_fakes_flat = state.disc.backward(d_logits)
    _backprop_fakes(state, d_fakes_flat.reshape(fakes.shape), proj_cache,
                    lift_cache)
    try:
        state.adam_gen.step()
    except OptimizerError as exc:
        _dump_diagnostics(state, None, gen_in, None, gen_loss,
                          reason=str(exc))
    state.disc.zero_grad()  # drop gradients leaked through the frozen pass
    return gen_loss


def train_step(state: TrainState, real_batch, gen_input_batch) -> dict:
    """One discriminator update followed by one generator update.

    The generator forwards its batch once; the discriminator sub-step and the
    generator sub-step each draw their own fresh random rotations of the
    lifted skeletons.  Returns the telemetry row; raises TrainingError (after
    dumping the batches) if a loss goes non-finite.
    """
    real = np.asarray(real_batch, dtype=np.float64)
    gen_in = np.asarray(gen_input_batch, dtype=np.float64)
    t0 = time.perf_counter()
    try:
        skel, lift_cache = _lift_batch(state, gen_in)
        disc_loss, acc_real, acc_fake = _disc_update(state, real, gen_in, skel)
        gen_loss = _gen_update(state, gen_in, skel, lift_cache)
    except (GeometryError, OptimizerError, ValueError) as exc:
        # anything non-finite inside the step lands here
        _dump_diagnostics(state, real, gen_in, None, None, reason=str(exc))
    state.step += 1
    wall_ms = 0.0 if state.cfg.sequential else (time.perf_counter() - t0) * 1e3
    return {
        "step": state.step,
        "disc_loss": disc_loss,
        "gen_loss": gen_loss,
        "disc_acc_real": acc_real,
        "disc_acc_fake": acc_fake,
        "wall_ms": wall_ms,
    }


def _dump_diagnostics(state: TrainState, real, gen_in, disc_loss, gen_loss,
                      reason: str = "non-finite loss") -> None:
    from .data import save_poses_csv

    out_dir = state.run_dir or "."
    tag = f"diagnostic_step{state.step:06d}"
    written = []
    for label, batch in (("real", real), ("gen_input", gen_in)):
        if batch is not None:
            path = os.path.join(out_dir, f"{tag}_{label}.csv")
            save_poses_csv(path, batch)
            written.append(path)
    raise TrainingError(
        f"aborting at step {state.step}: {reason} "
        f"(disc_loss={disc_loss}, gen_loss={gen_loss}); offending batches "
        f"written to {', '.join(written)}")


def _telemetry_line(row: dict) -> str:
    return "%d,%.17g,%.17g,%.17g,%.17g,%.3f" % (
        row["step"], row["disc_loss"], row["gen_loss"],
        row["disc_acc_real"], row["disc_acc_fake"], row["wall_ms"])


def train(state: TrainState, real_poses, gen_input_poses,
          run_dir: str | None = None) -> TrainState:
    """Run the adversarial loop from state.step up to cfg.steps.

    Both pose sets must already be normalized with the same NormStats.  Each
    is shuffled without replacement epoch by epoch; a step consumes
    ``disc_steps_per_gen_step`` real/fake batch pairs for the discriminator
    and reuses the last generator-input batch for the generator update.
    Telemetry goes to ``run_dir/telemetry.csv`` and periodic checkpoints to
    ``run_dir/checkpoints/step_NNNNNN`` when a run directory is given.
    """
    cfg = state.cfg
    real = np.asarray(real_poses, dtype=np.float64)
    gen_in = np.asarray(gen_input_poses, dtype=np.float64)
    for name, arr in (("real", real), ("gen_input", gen_in)):
        if arr.ndim != 3 or arr.shape[1:] != (state.topology.num_joints, 2):
            raise ValueError(f"{name} poses must be (N, J, 2), got {arr.shape}")
        if arr.shape[0] < cfg.batch_size:
            raise TrainingError(
                f"{name} dataset has {arr.shape[0]} poses, "
                f"smaller than batch_size {cfg.batch_size}")
    if state.real_sampler is None:
        state.real_sampler = _Sampler(real.shape[0])
    if state.gen_sampler is None:
        state.gen_sampler = _Sampler(gen_in.shape[0])
    if state.real_sampler.n != real.shape[0] or state.gen_sampler.n != gen_in.shape[0]:
        raise TrainingError("dataset size changed since the checkpoint was written")

    state.run_dir = run_dir
    telemetry_fh = None
    if run_dir is not None:
        os.makedirs(run_dir, exist_ok=True)
        telemetry_path = os.path.join(run_dir, "telemetry.csv")
        fresh = state.step == 0 or not os.path.exists(telemetry_path)
        telemetry_fh = open(telemetry_path, "w" if fresh else "a")
        if fresh:
            telemetry_fh.write(",".join(TELEMETRY_COLUMNS) + "\n")

    try:
        while state.step < cfg.steps:
            for _ in range(cfg.disc_steps_per_gen_step - 1):
                idx_r = state.real_sampler.next_batch(cfg.batch_size, state.rng)
                idx_g = state.gen_sampler.next_batch(cfg.batch_size, state.rng)
                _disc_update(state, real[idx_r], gen_in[idx_g])
            idx_r = state.real_sampler.next_batch(cfg.batch_size, state.rng)
            idx_g = state.gen_sampler.next_batch(cfg.batch_size, state.rng)
            row = train_step(state, real[idx_r], gen_in[idx_g])
            state.telemetry.append(row)
            if telemetry_fh is not None:
                telemetry_fh.write(_telemetry_line(row) + "\n")
                if state.step % 50 == 0:
                    telemetry_fh.flush()
            if (run_dir is not None and cfg.checkpoint_every > 0
                    and state.step % cfg.checkpoint_every == 0
                    and state.step < cfg.steps):
                save_train_state(
                    os.path.join(run_dir, "checkpoints",
                                 f"step_{state.step:06d}"), state)
        if run_dir is not None:
            save_train_state(
                os.path.join(run_dir, "checkpoints",
                             f"step_{state.step:06d}"), state)
    finally:
        if telemetry_fh is not None:
            telemetry_fh.close()
    return state


def save_train_state(path: str, state: TrainState) -> None:
    arrays: list[tuple[str, np.ndarray]] = []
    arrays += [("gen." + n, a) for n, a in state.gen.state_arrays()]
    arrays += [("disc." + n, a) for n, a in state.disc.state_arrays()]
    arrays += [("gen." + n, a) for n, a in state.adam_gen.state_arrays()]
    arrays += [("disc." + n, a) for n, a in state.adam_disc.state_arrays()]
    for tag, sampler in (("real", state.real_sampler),
                         ("gen_input", state.gen_sampler)):
        if sampler is not None and sampler.perm is not None:
            arrays.append((f"sampler.{tag}.perm",
                           sampler.perm.astype(np.float64)))
    meta = {
        "kind": "train_state",
        "step": state.step,
        "config": asdict(state.cfg),
        "norm_stats": state.norm_stats.to_dict(),
        "topology": state.topology.name,
        "rng": rng_state_to_json(state.rng),
        "adam_t_gen": state.adam_gen.t,
        "adam_t_disc": state.adam_disc.t,
        "samplers": {
            tag: {"n": s.n, "cursor": s.cursor, "has_perm": s.perm is not None}
            for tag, s in (("real", state.real_sampler),
                           ("gen_input", state.gen_sampler))
            if s is not None
        },
    }
    save_checkpoint(path, meta, arrays)


def _strip_prefix(arrays: dict[str, np.ndarray], prefix: str) -> dict:
    return {name[len(prefix):]: arr for name, arr in arrays.items()
            if name.startswith(prefix)}


def load_train_state(path: str,
                     topology: SkeletonTopology = DEFAULT_TOPOLOGY) -> TrainState:
    meta, arrays = load_checkpoint(path)
    if meta.get("kind") != "train_state":
        raise TrainingError(f"{path} does not hold a training state")
    if meta["topology"] != topology.name:
        raise TrainingError(
            f"checkpoint topology {meta['topology']!r} does not match "
            f"{topology.name!r}")
    cfg = TrainConfig.from_dict(meta["config"])
    state = setup_train_state(cfg, NormStats.from_dict(meta["norm_stats"]),
                              topology)
    state.gen.load_state(_strip_prefix(arrays, "gen."))
    state.disc.load_state(_strip_prefix(arrays, "disc."))
    state.adam_gen.load_state(_strip_prefix(arrays, "gen."), meta["adam_t_gen"])
    state.adam_disc.load_state(_strip_prefix(arrays, "disc."),
                               meta["adam_t_disc"])
    state.rng = rng_state_from_json(meta["rng"])
    state.step = int(meta["step"])
    for tag, attr in (("real", "real_sampler"), ("gen_input", "gen_sampler")):
        info = meta.get("samplers", {}).get(tag)
        if info is None:
            continue
        perm = None
        if info["has_perm"]:
            perm = arrays[f"sampler.{tag}.perm"].astype(np.int64)
        setattr(state, attr,
                _Sampler(int(info["n"]), perm, int(info["cursor"])))
    return state
