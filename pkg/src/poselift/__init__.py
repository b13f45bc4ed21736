"""Weakly supervised lifting of 2D human poses to 3D.

A generator predicts per-joint depth offsets for a root-centered 2D pose; the
lifted skeleton is rotated by a random camera and re-projected, and a
discriminator trained on the unpaired 2D pool pushes those synthetic views
toward the real distribution.  No 3D annotations or multi-view pairing are
used anywhere in training.
"""

__version__ = "0.1.0"

from .geometry import LiftConfig
from .gan import NormStats, TrainConfig
from .topology import DEFAULT_TOPOLOGY, SkeletonTopology

__all__ = [
    "LiftConfig",
    "NormStats",
    "TrainConfig",
    "DEFAULT_TOPOLOGY",
    "SkeletonTopology",
    "__version__",
]
