"""Synthetic pose corpus: forward-kinematic skeleton sampling, multi-view
camera augmentation, CSV persistence, and identity-aware splits.

Skeletons are sampled in a canonical frame: hip midpoint at the origin, y
roughly up, x to the subject's left, z toward the camera.  Bone lengths come
from a Gaussian prior (left/right coupled), articulations are random axis
rotations bounded by per-bone cone limits around depth-pitched rest poses,
the whole body gets a random lean, and the finished skeleton is rescaled so
the head sits 0.9 to 1.1 units from the root.  The hips stay mirror-symmetric
through all of it, so the hip midpoint is exactly the origin in 3D and in
every centered projection.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import (LiftConfig, perspective_project, rotate_about_pivot,
                       rotation_matrices)
from .topology import DEFAULT_TOPOLOGY, SkeletonTopology


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SegmentPrior:
    """Length distribution and articulation cone for one bone type."""

    length_mean: float
    length_std: float
    max_angle_deg: float
    rest_direction: tuple[float, float, float]

    def __post_init__(self) -> None:
        if self.length_mean <= 0 or self.length_std < 0:
            raise ValueError("segment lengths must be positive")
        if not (0.0 <= self.max_angle_deg <= 180.0):
            raise ValueError("max_angle_deg must lie in [0, 180]")


UP = (0.0, 1.0, 0.0)
DOWN = (0.0, -1.0, 0.0)
LEFT = (1.0, 0.0, 0.0)
RIGHT = (-1.0, 0.0, 0.0)


def _pitched(direction: tuple[float, float, float],
             toward_camera_deg: float) -> tuple[float, float, float]:
    """Unit rest direction pitched out of the frontal plane (+z = camera)."""
    x, y, _ = direction
    c = math.cos(math.radians(toward_camera_deg))
    s = math.sin(math.radians(toward_camera_deg))
    return (x * c, y * c, s)


# Rest pose stands 1.0 units from hip midpoint to head (0.82 torso + 0.18
# head).  Limb rests are pitched out of the frontal plane (elbows flex toward
# the camera, knees away), every cone is no wider than its rest pitch so a
# bone's depth component never changes sign, and length spread is ~1% so
# foreshortening pins the out-of-plane extent.  All three properties matter
# for learnability: without the chiral pitch the pose distribution is
# symmetric under z-reflection, with sign-flipping cones the residual depth
# of a limb is not a function of its projection, and loose lengths blur the
# foreshortening cue by L·dL/z per bone.  Whole-body scale still varies
# through scale_range.
DEFAULT_SEGMENTS = {
    "torso": SegmentPrior(0.82, 0.008, 8.0, _pitched(UP, 8.0)),
    "head": SegmentPrior(0.18, 0.002, 10.0, _pitched(UP, 10.0)),
    "clavicle": SegmentPrior(0.18, 0.002, 6.0, _pitched(LEFT, 4.0)),
    "upper_arm": SegmentPrior(0.30, 0.003, 25.0, _pitched(DOWN, 28.0)),
    "forearm": SegmentPrior(0.26, 0.003, 30.0, _pitched(DOWN, 38.0)),
    "thigh": SegmentPrior(0.45, 0.004, 20.0, _pitched(DOWN, -24.0)),
    "shin": SegmentPrior(0.42, 0.004, 25.0, _pitched(DOWN, -30.0)),
}

# which segment prior feeds each bone, keyed by child joint name
BONE_SEGMENTS = {
    "neck": "torso",
    "head": "head",
    "left_shoulder": "clavicle",
    "right_shoulder": "clavicle",
    "left_elbow": "upper_arm",
    "right_elbow": "upper_arm",
    "left_wrist": "forearm",
    "right_wrist": "forearm",
    "left_knee": "thigh",
    "right_knee": "thigh",
    "left_ankle": "shin",
    "right_ankle": "shin",
}


@dataclass(frozen=True)
class SkeletonPrior:
    """Sampling distribution over plausible skeletons.

    symmetry_coupling c mixes a shared length draw into the left/right pair:
    c = 1 forces exact symmetry, c = 0 makes the sides independent.  The
    final skeleton is rescaled so head-to-root distance is uniform in
    ``scale_range``.
    """

    topology: SkeletonTopology = DEFAULT_TOPOLOGY
    segments: dict = field(default_factory=lambda: dict(DEFAULT_SEGMENTS))
    hip_halfwidth_mean: float = 0.10
    hip_halfwidth_std: float = 0.008
    symmetry_coupling: float = 1.0
    scale_range: tuple[float, float] = (0.9, 1.1)
    body_tilt_deg: float = 12.0
    body_pitch_deg: float = 4.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.symmetry_coupling <= 1.0):
            raise ValueError("symmetry_coupling must lie in [0, 1]")
        lo, hi = self.scale_range
        if not (0.0 < lo <= hi):
            raise ValueError("scale_range must be positive with lo <= hi")
        if not (0.0 <= self.body_tilt_deg <= 45.0):
            raise ValueError("body_tilt_deg must lie in [0, 45]")
        if not (0.0 <= self.body_pitch_deg <= 45.0):
            raise ValueError("body_pitch_deg must lie in [0, 45]")
        missing = [n for n in BONE_SEGMENTS.values() if n not in self.segments]
        if missing:
            raise ValueError(f"prior lacks segment entries: {sorted(set(missing))}")


def _axis_angle_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def _random_rotation_within(limit_deg: float, rng: np.random.Generator):
    """Uniform-axis rotation with angle ~ U[0, limit]."""
    v = rng.standard_normal(3)
    norm = np.linalg.norm(v)
    while norm < 1e-9:
        v = rng.standard_normal(3)
        norm = np.linalg.norm(v)
    angle = np.deg2rad(rng.uniform(0.0, limit_deg))
    return _axis_angle_matrix(v / norm, angle), np.rad2deg(angle)


def _sample_lengths(prior: SkeletonPrior, rng: np.random.Generator) -> dict:
    """Per-bone lengths keyed by child joint name, left/right coupled."""
    c = prior.symmetry_coupling
    mix = np.sqrt(max(0.0, 1.0 - c * c))
    lengths: dict[str, float] = {}
    for seg_name in sorted(prior.segments):
        seg = prior.segments[seg_name]
        bones = sorted(b for b, s in BONE_SEGMENTS.items() if s == seg_name)
        if len(bones) == 1:
            draw = seg.length_mean + seg.length_std * rng.standard_normal()
            lengths[bones[0]] = max(draw, 0.1 * seg.length_mean)
        else:
            shared = rng.standard_normal()
            for bone in bones:
                own = rng.standard_normal()
                draw = seg.length_mean + seg.length_std * (
                    c * shared + mix * own)
                lengths[bone] = max(draw, 0.1 * seg.length_mean)
    return lengths


def sample_skeleton(prior: SkeletonPrior, rng: np.random.Generator,
                    return_details: bool = False):
    """Draw one canonical-frame skeleton (J, 3).

    Articulation works down the tree: each bone's frame is its parent frame
    composed with a random axis rotation whose angle stays inside the bone's
    cone limit.  Legs hang from the pelvis (identity frame), so a torso lean
    does not drag them along.  With ``return_details`` the sampled angles and
    lengths come back for auditing the limits.
    """
    topo = prior.topology
    lengths = _sample_lengths(prior, rng)
    hip_half = max(prior.hip_halfwidth_mean
                   + prior.hip_halfwidth_std * rng.standard_normal(),
                   0.1 * prior.hip_halfwidth_mean)
    joints = np.zeros((topo.num_joints, 3))
    frames = {}
    angles: dict[str, float] = {}
    idx = {name: i for i, name in enumerate(topo.joint_names)}

    # pelvis children: rigid hips plus the articulated torso
    joints[idx["left_hip"]] = np.array([hip_half, 0.0, 0.0])
    joints[idx["right_hip"]] = np.array([-hip_half, 0.0, 0.0])
    frames["left_hip"] = np.eye(3)
    frames["right_hip"] = np.eye(3)

    seg_torso = prior.segments[BONE_SEGMENTS["neck"]]
    rot, ang = _random_rotation_within(seg_torso.max_angle_deg, rng)
    frames["neck"] = rot
    angles["neck"] = ang
    joints[idx["neck"]] = frames["neck"] @ (
        np.asarray(seg_torso.rest_direction) * lengths["neck"])

    chains = (
        ("head", "neck"),
        ("left_shoulder", "neck"), ("left_elbow", "left_shoulder"),
        ("left_wrist", "left_elbow"),
        ("right_shoulder", "neck"), ("right_elbow", "right_shoulder"),
        ("right_wrist", "right_elbow"),
        ("left_knee", "left_hip"), ("left_ankle", "left_knee"),
        ("right_knee", "right_hip"), ("right_ankle", "right_knee"),
    )
    for child, parent in chains:
        seg = prior.segments[BONE_SEGMENTS[child]]
        rot, ang = _random_rotation_within(seg.max_angle_deg, rng)
        frames[child] = frames[parent] @ rot
        angles[child] = ang
        rest = np.asarray(seg.rest_direction, dtype=np.float64)
        if child.startswith("right_") and BONE_SEGMENTS[child] == "clavicle":
            rest = rest * np.array([-1.0, 1.0, 1.0])
        joints[idx[child]] = joints[idx[parent]] + frames[child] @ (
            rest * lengths[child])

    # whole-body lean: roll about z moves the body's up axis off
    # image-vertical the way real subjects stand; pitch about x stays small
    # because toward-camera tilt is nearly invisible in projection and would
    # inject unrecoverable depth variance.  Root stays at the origin and the
    # hips stay mirror-symmetric through both.
    roll = np.deg2rad(rng.uniform(-prior.body_tilt_deg, prior.body_tilt_deg))
    pitch = np.deg2rad(rng.uniform(-prior.body_pitch_deg, prior.body_pitch_deg))
    lean = (_axis_angle_matrix(np.array([0.0, 0.0, 1.0]), roll)
            @ _axis_angle_matrix(np.array([1.0, 0.0, 0.0]), pitch))
    joints = joints @ lean.T

    # hips are symmetric about the origin, so the root is already centered;
    # rescale so head-to-root distance lands in the prior's range
    head_dist = np.linalg.norm(joints[topo.head_index])
    target = rng.uniform(*prior.scale_range)
    joints *= target / head_dist

    if return_details:
        return joints, {"angles": angles, "lengths": lengths,
                        "hip_halfwidth": hip_half, "head_dist": target,
                        "roll_deg": float(np.rad2deg(roll)),
                        "pitch_deg": float(np.rad2deg(pitch))}
    return joints


def augment_views(skeleton, rng: np.random.Generator,
                  num_views: int = 8,
                  cfg: LiftConfig = LiftConfig(),
                  topology: SkeletonTopology = DEFAULT_TOPOLOGY,
                  azimuth_range: tuple[float, float] = (0.0, 360.0),
                  elevation_range: tuple[float, float] = (0.0, 20.0),
                  rotations: np.ndarray | None = None,
                  jitter_std: float = 0.0):
    """Project one canonical skeleton through ``num_views`` random cameras.

    The skeleton is placed at the pivot (0, 0, d), rotated per view, and
    perspective-projected; each 2D view is then centered at its hip midpoint
    the way per-image detections would be.  Optional Gaussian jitter models
    detector noise in the image plane (the returned 3D views stay clean).
    Returns (views_2d, views_3d) of shapes (V, J, 2) and (V, J, 3); the 3D
    views are camera-frame joints around the pivot.
    """
    sk = np.asarray(skeleton, dtype=np.float64)
    if sk.ndim != 2 or sk.shape != (topology.num_joints, 3):
        raise DatasetError(
            f"skeleton must be ({topology.num_joints}, 3), got {sk.shape}")
    if rotations is None:
        az = rng.uniform(*azimuth_range, size=num_views)
        el = rng.uniform(*elevation_range, size=num_views)
        rotations = rotation_matrices(az, el)
    else:
        rotations = np.asarray(rotations, dtype=np.float64)
        num_views = rotations.shape[0]
    placed = np.broadcast_to(sk + cfg.pivot, (num_views,) + sk.shape)
    rotated, _ = rotate_about_pivot(placed, rotations, cfg)
    views_2d = perspective_project(rotated)
    if jitter_std > 0.0:
        views_2d = views_2d + rng.normal(0.0, jitter_std, size=views_2d.shape)
    views_2d = topology.root_center(views_2d)
    return views_2d, rotated


@dataclass
class PoseDataset:
    """Aligned 2D/3D pose arrays with optional labels and identity groups.

    ``group_ids`` tracks which source skeleton produced each view so splits
    can keep identities disjoint; it is carried in the sidecar metadata, not
    the CSVs.
    """

    poses_2d: np.ndarray
    poses_3d: np.ndarray | None = None
    labels: list[str] | None = None
    group_ids: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.poses_2d = np.asarray(self.poses_2d, dtype=np.float64)
        n = self.poses_2d.shape[0]
        if self.poses_2d.ndim != 3 or self.poses_2d.shape[2] != 2:
            raise DatasetError(
                f"poses_2d must be (N, J, 2), got {self.poses_2d.shape}")
        if self.poses_3d is not None:
            self.poses_3d = np.asarray(self.poses_3d, dtype=np.float64)
            if self.poses_3d.shape != self.poses_2d.shape[:2] + (3,):
                raise DatasetError("poses_3d shape does not match poses_2d")
        if self.labels is not None and len(self.labels) != n:
            raise DatasetError("labels length does not match pose count")
        if self.group_ids is not None:
            self.group_ids = np.asarray(self.group_ids, dtype=np.int64)
            if self.group_ids.shape != (n,):
                raise DatasetError("group_ids length does not match pose count")

    def __len__(self) -> int:
        return self.poses_2d.shape[0]

    def subset(self, index: np.ndarray) -> "PoseDataset":
        return PoseDataset(
            poses_2d=self.poses_2d[index],
            poses_3d=None if self.poses_3d is None else self.poses_3d[index],
            labels=None if self.labels is None else
            [self.labels[i] for i in index],
            group_ids=None if self.group_ids is None else self.group_ids[index],
            meta=dict(self.meta),
        )


def generate_dataset(prior: SkeletonPrior, num_skeletons: int, seed: int,
                     views_per_skeleton: int = 8,
                     cfg: LiftConfig = LiftConfig(),
                     azimuth_range: tuple[float, float] = (0.0, 360.0),
                     elevation_range: tuple[float, float] = (0.0, 20.0),
                     jitter_std: float = 0.0) -> PoseDataset:
    """Sample skeletons and their camera views into one dataset.

    Each skeleton gets its own RNG stream keyed by (seed, index), so any
    subset of the corpus can be regenerated independently.
    """
    if num_skeletons < 1 or views_per_skeleton < 1:
        raise DatasetError("need at least one skeleton and one view")
    n = num_skeletons * views_per_skeleton
    j = prior.topology.num_joints
    poses_2d = np.empty((n, j, 2))
    poses_3d = np.empty((n, j, 3))
    group_ids = np.repeat(np.arange(num_skeletons, dtype=np.int64),
                          views_per_skeleton)
    for i in range(num_skeletons):
        rng = np.random.Generator(np.random.PCG64([seed, i]))
        sk = sample_skeleton(prior, rng)
        v2, v3 = augment_views(
            sk, rng, num_views=views_per_skeleton, cfg=cfg,
            topology=prior.topology, azimuth_range=azimuth_range,
            elevation_range=elevation_range, jitter_std=jitter_std)
        lo = i * views_per_skeleton
        poses_2d[lo:lo + views_per_skeleton] = v2
        poses_3d[lo:lo + views_per_skeleton] = v3
    meta = {
        "seed": seed,
        "num_skeletons": num_skeletons,
        "views_per_skeleton": views_per_skeleton,
        "distance": cfg.distance,
        "jitter_std": jitter_std,
        "topology": prior.topology.name,
    }
    return PoseDataset(poses_2d, poses_3d, None, group_ids, meta)


def split_dataset(ds: PoseDataset, fractions: tuple[float, float, float],
                  seed: int) -> tuple[PoseDataset, PoseDataset, PoseDataset]:
    """Split by skeleton identity so no subject leaks across subsets."""
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or any(f < 0.0 or f > 1.0 for f in fr):
        raise DatasetError(f"fractions must be three values in [0, 1], got {fr}")
    if abs(sum(fr) - 1.0) > 1e-9:
        raise DatasetError(f"fractions must sum to 1, got {sum(fr)}")
    if ds.group_ids is None:
        raise DatasetError("dataset has no group ids to split by")
    rng = np.random.Generator(np.random.PCG64(seed))
    groups = np.unique(ds.group_ids)
    order = rng.permutation(len(groups))
    shuffled = groups[order]
    n_train = int(round(fr[0] * len(groups)))
    n_val = int(round(fr[1] * len(groups)))
    parts = (shuffled[:n_train], shuffled[n_train:n_train + n_val],
             shuffled[n_train + n_val:])
    out = []
    for part in parts:
        mask = np.isin(ds.group_ids, part)
        out.append(ds.subset(np.flatnonzero(mask)))
    return tuple(out)


def _pose_header(num_joints: int, dims: int) -> list[str]:
    axes = "xyz"[:dims]
    return [f"{axis}{j + 1}" for j in range(num_joints) for axis in axes]


def save_poses_csv(path: str, poses, labels: list[str] | None = None) -> None:
    """Write poses as CSV: header row, 17 significant digits, optional class.

    2D poses produce x1,y1,...,x14,y14 columns; 3D adds z.  The precision is
    enough for float64 round trips to be exact.
    """
    arr = np.asarray(poses, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] not in (2, 3):
        raise DatasetError(f"poses must be (N, J, 2|3), got {arr.shape}")
    n, j, dims = arr.shape
    if labels is not None and len(labels) != n:
        raise DatasetError("labels length does not match pose count")
    header = _pose_header(j, dims)
    if labels is not None:
        header.append("class")
    flat = arr.reshape(n, j * dims)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            row = ",".join("%.17g" % v for v in flat[i])
            if labels is not None:
                row += "," + labels[i]
            fh.write(row + "\n")


def load_poses_csv(path: str, num_joints: int = 14):
    """Read a pose CSV back into ((N, J, dims) array, labels or None).

    The header decides whether the file is 2D or 3D and whether a class
    column is present; malformed rows raise with their line number.
    """
    if not os.path.isfile(path):
        raise DatasetError(f"no such pose file: {path}")
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetError(f"{path}: missing header row")
    header = lines[0].split(",")
    has_labels = header and header[-1] == "class"
    value_cols = header[:-1] if has_labels else header
    for dims in (2, 3):
        if value_cols == _pose_header(num_joints, dims):
            break
    else:
        raise DatasetError(
            f"{path}: header does not match a {num_joints}-joint pose layout")
    rows = []
    labels: list[str] = []
    expected = len(header)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != expected:
            raise DatasetError(
                f"{path}:{lineno}: expected {expected} columns, got {len(parts)}")
        try:
            values = [float(v) for v in
                      (parts[:-1] if has_labels else parts)]
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from None
        if not all(np.isfinite(values)):
            raise DatasetError(f"{path}:{lineno}: non-finite value")
        rows.append(values)
        if has_labels:
            labels.append(parts[-1])
    arr = (np.array(rows, dtype=np.float64).reshape(len(rows), num_joints, dims)
           if rows else np.empty((0, num_joints, dims)))
    return arr, (labels if has_labels else None)


def save_dataset(ds: PoseDataset, prefix: str) -> None:
    """Persist a dataset as ``<prefix>_2d.csv`` (+ _3d.csv, _meta.json)."""
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    save_poses_csv(prefix + "_2d.csv", ds.poses_2d, ds.labels)
    if ds.poses_3d is not None:
        save_poses_csv(prefix + "_3d.csv", ds.poses_3d, ds.labels)
    sidecar = {
        "meta": ds.meta,
        "group_ids": None if ds.group_ids is None else
        [int(g) for g in ds.group_ids],
    }
    with open(prefix + "_meta.json", "w") as fh:
        json.dump(sidecar, fh)
        fh.write("\n")


def load_dataset(prefix: str, num_joints: int = 14) -> PoseDataset:
    poses_2d, labels = load_poses_csv(prefix + "_2d.csv", num_joints)
    poses_3d = None
    path_3d = prefix + "_3d.csv"
    if os.path.isfile(path_3d):
        poses_3d, labels_3d = load_poses_csv(path_3d, num_joints)
        if labels_3d is not None and labels is not None and labels_3d != labels:
            raise DatasetError(f"{path_3d}: class column disagrees with 2D file")
    group_ids = None
    meta: dict = {}
    sidecar_path = prefix + "_meta.json"
    if os.path.isfile(sidecar_path):
        with open(sidecar_path) as fh:
            sidecar = json.load(fh)
        meta = sidecar.get("meta", {})
        if sidecar.get("group_ids") is not None:
            group_ids = np.array(sidecar["group_ids"], dtype=np.int64)
    return PoseDataset(poses_2d, poses_3d, labels, group_ids, meta)
