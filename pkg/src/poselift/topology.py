"""14-joint skeleton convention shared by every stage of the pipeline.

Joint order is fixed; 2D pose rows flatten to (x1, y1, ..., x14, y14) and 3D
rows to (x1, y1, z1, ...).  The root used for centering is the hip midpoint,
which is not itself a joint.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JOINT_NAMES = (
    "head",
    "neck",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)


@dataclass(frozen=True)
class SkeletonTopology:
    """Joint names plus a parent tree over them.

    ``parent_index[i]`` is the index of joint i's parent, or -1 for the tree
    root (the joint attached directly to the pelvis).  ``symmetric_pairs``
    lists (left, right) joint index pairs whose incoming bones mirror each
    other.
    """

    name: str
    joint_names: tuple[str, ...]
    parent_index: tuple[int, ...]
    head_index: int
    left_hip_index: int
    right_hip_index: int
    symmetric_pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        n = len(self.joint_names)
        if len(self.parent_index) != n:
            raise ValueError("parent_index length must match joint count")
        roots = [i for i, p in enumerate(self.parent_index) if p == -1]
        if len(roots) != 1:
            raise ValueError("topology must have exactly one tree root")
        for i, p in enumerate(self.parent_index):
            if p != -1 and not (0 <= p < n):
                raise ValueError(f"parent index {p} of joint {i} out of range")
        # reject cycles: walking up from any joint must reach the root
        for i in range(n):
            seen = set()
            j = i
            while j != -1:
                if j in seen:
                    raise ValueError("parent pointers contain a cycle")
                seen.add(j)
                j = self.parent_index[j]
        for idx in (self.head_index, self.left_hip_index, self.right_hip_index):
            if not (0 <= idx < n):
                raise ValueError("named joint index out of range")
        if self.left_hip_index == self.right_hip_index:
            raise ValueError("hip indices must be distinct")

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    @property
    def input_width(self) -> int:
        """Width of a flattened 2D pose row."""
        return 2 * self.num_joints

    @property
    def bone_list(self) -> tuple[tuple[int, int], ...]:
        """(child, parent) pairs, one per non-root joint."""
        return tuple(
            (i, p) for i, p in enumerate(self.parent_index) if p != -1
        )

    def joint_index(self, name: str) -> int:
        return self.joint_names.index(name)

    def hip_midpoint(self, points: np.ndarray) -> np.ndarray:
        """Root location (hip midpoint) for (..., J, C) joint arrays."""
        points = np.asarray(points, dtype=np.float64)
        if points.shape[-2] != self.num_joints:
            raise ValueError(
                f"expected {self.num_joints} joints, got {points.shape[-2]}"
            )
        lh = points[..., self.left_hip_index, :]
        rh = points[..., self.right_hip_index, :]
        return 0.5 * (lh + rh)

    def root_center(self, points: np.ndarray) -> np.ndarray:
        """Translate each pose so its hip midpoint sits at the origin."""
        points = np.asarray(points, dtype=np.float64)
        return points - self.hip_midpoint(points)[..., None, :]


def default_topology() -> SkeletonTopology:
    parents = {
        "head": "neck",
        "neck": None,
        "left_shoulder": "neck",
        "right_shoulder": "neck",
        "left_elbow": "left_shoulder",
        "right_elbow": "right_shoulder",
        "left_wrist": "left_elbow",
        "right_wrist": "right_elbow",
        "left_hip": "neck",
        "right_hip": "neck",
        "left_knee": "left_hip",
        "right_knee": "right_hip",
        "left_ankle": "left_knee",
        "right_ankle": "right_knee",
    }
    idx = {name: i for i, name in enumerate(JOINT_NAMES)}
    parent_index = tuple(
        -1 if parents[name] is None else idx[parents[name]]
        for name in JOINT_NAMES
    )
    pairs = tuple(
        (idx["left_" + part], idx["right_" + part])
        for part in ("shoulder", "elbow", "wrist", "hip", "knee", "ankle")
    )
    return SkeletonTopology(
        name="basic14",
        joint_names=JOINT_NAMES,
        parent_index=parent_index,
        head_index=idx["head"],
        left_hip_index=idx["left_hip"],
        right_hip_index=idx["right_hip"],
        symmetric_pairs=pairs,
    )


DEFAULT_TOPOLOGY = default_topology()
