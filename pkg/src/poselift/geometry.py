"""Differentiable camera geometry: depth decoding, back-projection, rotation
about the skeleton pivot, and perspective re-projection.

All arrays are float64.  Poses are (..., J, 2), 3D joints (..., J, 3), with
the camera at the origin looking down +z.  The skeleton sits around the pivot
(0, 0, d).  Each forward op has a matching ``*_backward`` that maps upstream
gradients through the exact Jacobian, including the zero-gradient regions
introduced by the two clamps (depth hinge and rotated-z floor).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_DEPTH = 1.0


class GeometryError(ValueError):
    """Domain violation in a geometry op (non-finite input, z below the floor)."""


@dataclass(frozen=True)
class LiftConfig:
    """Shared camera constants.

    distance: pivot depth d; the decoded depth for a zero offset is d + 1.
    """

    distance: float = 10.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.distance) or self.distance <= MIN_DEPTH:
            raise ValueError(f"distance must be finite and > {MIN_DEPTH}")

    @property
    def pivot(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.distance])


def _as_float64(arr, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise GeometryError(f"{name} contains non-finite values")
    return out


def depth_from_offset(offsets, cfg: LiftConfig):
    """Decode per-joint depths z = max(0, d + o) + 1.

    Returns (z, active) where ``active`` is 1.0 where the hinge passes the
    offset through and 0.0 where it is clamped; dz/do equals ``active``.
    """
    o = _as_float64(offsets, "offsets")
    pre = cfg.distance + o
    active = (pre > 0.0).astype(np.float64)
    z = np.maximum(pre, 0.0) + 1.0
    return z, active


def depth_from_offset_backward(d_z, active) -> np.ndarray:
    return np.asarray(d_z, dtype=np.float64) * active


def back_project(pose, z) -> np.ndarray:
    """Lift 2D joints to 3D along camera rays: X = (z*x, z*y, z).

    pose: (..., J, 2), z: (..., J).  Requires z >= 1 everywhere.
    """
    p = _as_float64(pose, "pose")
    zz = _as_float64(z, "z")
    if p.shape[:-1] != zz.shape or p.shape[-1] != 2:
        raise ValueError(f"shape mismatch: pose {p.shape}, z {zz.shape}")
    if np.any(zz < MIN_DEPTH):
        raise GeometryError(f"back_project requires z >= {MIN_DEPTH}")
    out = np.empty(p.shape[:-1] + (3,))
    out[..., 0] = zz * p[..., 0]
    out[..., 1] = zz * p[..., 1]
    out[..., 2] = zz
    return out


def back_project_backward(d_points, pose, z):
    """Gradients of back_project w.r.t. (pose, z).

    dX/dx = z on the x row; dX/dz = (x, y, 1).
    """
    g = np.asarray(d_points, dtype=np.float64)
    p = np.asarray(pose, dtype=np.float64)
    zz = np.asarray(z, dtype=np.float64)
    d_pose = g[..., :2] * zz[..., None]
    d_z = g[..., 0] * p[..., 0] + g[..., 1] * p[..., 1] + g[..., 2]
    return d_pose, d_z


def rotate_about_pivot(points, matrices, cfg: LiftConfig):
    """Rotate joints about the pivot T = (0, 0, d): P = R (X - T) + T.

    points: (J, 3) or (B, J, 3); matrices: (3, 3) or (B, 3, 3) and must be
    proper rotations.  The rotated z is floored at 1 so every joint stays in
    front of the camera; returns (P, unclamped) where ``unclamped`` marks
    joints whose z passed through (gradient of the floor region is zero).
    """
    x = _as_float64(points, "points")
    R = _as_float64(matrices, "matrices")
    if x.shape[-1] != 3:
        raise ValueError(f"points must be (..., 3), got {x.shape}")
    if R.shape[-2:] != (3, 3):
        raise ValueError(f"matrices must be (..., 3, 3), got {R.shape}")
    centered = x - cfg.pivot
    if R.ndim == 2:
        rotated = centered @ R.T
    else:
        rotated = np.einsum("bij,bnj->bni", R, centered)
    rotated = rotated + cfg.pivot
    unclamped = (rotated[..., 2] > MIN_DEPTH).astype(np.float64)
    rotated[..., 2] = np.maximum(rotated[..., 2], MIN_DEPTH)
    return rotated, unclamped


def rotate_about_pivot_backward(d_rotated, matrices, unclamped) -> np.ndarray:
    """Chain upstream gradients through the rotation (and the z floor)."""
    g = np.array(d_rotated, dtype=np.float64)
    R = np.asarray(matrices, dtype=np.float64)
    g[..., 2] = g[..., 2] * unclamped
    if R.ndim == 2:
        return g @ R
    return np.einsum("bni,bij->bnj", g, R)


def perspective_project(points) -> np.ndarray:
    """Perspective division: p = (X/Z, Y/Z).  Requires Z >= 1."""
    P = _as_float64(points, "points")
    if P.shape[-1] != 3:
        raise ValueError(f"points must be (..., 3), got {P.shape}")
    z = P[..., 2]
    if np.any(z < MIN_DEPTH):
        raise GeometryError(f"perspective_project requires Z >= {MIN_DEPTH}")
    return P[..., :2] / z[..., None]


def perspective_project_backward(d_pose, points) -> np.ndarray:
    """d p_x / d X = 1/Z, d p_x / d Z = -X / Z^2 (same pattern for y)."""
    g = np.asarray(d_pose, dtype=np.float64)
    P = np.asarray(points, dtype=np.float64)
    z = P[..., 2]
    out = np.empty_like(P)
    out[..., :2] = g / z[..., None]
    out[..., 2] = -(g[..., 0] * P[..., 0] + g[..., 1] * P[..., 1]) / (z * z)
    return out


def rotation_matrices(azimuth_deg, elevation_deg) -> np.ndarray:
    """R = R_elev @ R_azim for degree inputs (scalars or equal-shape arrays).

    Azimuth orbits about the +y (vertical) axis; positive elevation tilts the
    subject as seen by a camera raised above the horizon (a joint in front of
    the pivot swings upward, the head leans toward the camera).
    """
    az = np.deg2rad(np.asarray(azimuth_deg, dtype=np.float64))
    el = np.deg2rad(np.asarray(elevation_deg, dtype=np.float64))
    az, el = np.broadcast_arrays(az, el)
    ca, sa = np.cos(az), np.sin(az)
    ce, se = np.cos(el), np.sin(el)
    zero = np.zeros_like(ca)
    one = np.ones_like(ca)
    r_az = np.stack(
        [
            np.stack([ca, zero, sa], axis=-1),
            np.stack([zero, one, zero], axis=-1),
            np.stack([-sa, zero, ca], axis=-1),
        ],
        axis=-2,
    )
    r_el = np.stack(
        [
            np.stack([one, zero, zero], axis=-1),
            np.stack([zero, ce, se], axis=-1),
            np.stack([zero, -se, ce], axis=-1),
        ],
        axis=-2,
    )
    return r_el @ r_az


@dataclass(frozen=True)
class CameraRotation:
    azimuth_deg: float
    elevation_deg: float
    matrix: np.ndarray

    def __post_init__(self) -> None:
        R = self.matrix
        if R.shape != (3, 3):
            raise ValueError("rotation matrix must be 3x3")
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-12):
            raise ValueError("rotation matrix is not orthonormal")
        if not np.isclose(np.linalg.det(R), 1.0, atol=1e-12):
            raise ValueError("rotation matrix must have determinant +1")


def rotation_from_angles(
    azimuth_deg: float,
    elevation_deg: float,
    elevation_limits: tuple[float, float] = (0.0, 20.0),
) -> CameraRotation:
    """Build a validated camera rotation from orbit angles.

    Azimuth is taken modulo 360; elevation must lie inside
    ``elevation_limits`` (the sampling range used during augmentation).
    """
    if not (np.isfinite(azimuth_deg) and np.isfinite(elevation_deg)):
        raise GeometryError("angles must be finite")
    lo, hi = elevation_limits
    if not (lo <= elevation_deg <= hi):
        raise GeometryError(
            f"elevation {elevation_deg} outside limits [{lo}, {hi}]"
        )
    az = float(azimuth_deg) % 360.0
    return CameraRotation(az, float(elevation_deg), rotation_matrices(az, elevation_deg))
