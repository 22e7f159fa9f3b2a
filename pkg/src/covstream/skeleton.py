"""Skeleton frames and their conversion to pose feature vectors.

A frame is a (K, 3) array of joint positions plus a layout naming the joints
and the three reference roles: hip center (the origin), and shoulder center /
spine (whose distance sets the body scale). Normalization translates the hip
to the origin and divides by that distance, which removes sensor placement
and subject size but deliberately keeps orientation. The hip row is dropped
from the feature since it is identically zero, giving d = (K - 1) * 3.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covariance import MIN_FRAME_WEIGHT
from .errors import DegenerateSkeletonError, DimensionMismatchError, NumericalFaultError

# Below this shoulder-to-spine distance a skeleton has no usable scale.
DEGENERATE_SCALE = 1e-6


@dataclass(frozen=True)
class JointLayout:
    """Joint naming and reference roles for a skeleton format.

    Attributes
    ----------
    names : tuple of str
        Joint names in stream order; length K >= 4.
    hip_center, shoulder_center, spine : int
        Indices of the three reference joints, all distinct.
    """

    names: tuple[str, ...]
    hip_center: int
    shoulder_center: int
    spine: int

    def __post_init__(self) -> None:
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 4:
            raise ValueError(f"need at least 4 joints, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError("joint names must be unique")
        roles = (self.hip_center, self.shoulder_center, self.spine)
        for idx in roles:
            if not 0 <= idx < len(names):
                raise ValueError(f"role index {idx} out of range for {len(names)} joints")
        if len(set(roles)) != 3:
            raise ValueError("hip_center, shoulder_center and spine must be distinct joints")

    @property
    def joint_count(self) -> int:
        return len(self.names)

    @property
    def feature_dim(self) -> int:
        """Dimension of the normalized feature vector: (K - 1) * 3."""
        return (len(self.names) - 1) * 3


KINECT20_LAYOUT = JointLayout(
    names=(
        "hip_center", "spine", "shoulder_center", "head",
        "shoulder_left", "elbow_left", "wrist_left", "hand_left",
        "shoulder_right", "elbow_right", "wrist_right", "hand_right",
        "hip_left", "knee_left", "ankle_left", "foot_left",
        "hip_right", "knee_right", "ankle_right", "foot_right",
    ),
    hip_center=0,
    shoulder_center=2,
    spine=1,
)

KINECT25_LAYOUT = JointLayout(
    names=(
        "spine_base", "spine_mid", "neck", "head",
        "shoulder_left", "elbow_left", "wrist_left", "hand_left",
        "shoulder_right", "elbow_right", "wrist_right", "hand_right",
        "hip_left", "knee_left", "ankle_left", "foot_left",
        "hip_right", "knee_right", "ankle_right", "foot_right",
        "spine_shoulder", "hand_tip_left", "thumb_left",
        "hand_tip_right", "thumb_right",
    ),
    hip_center=0,
    shoulder_center=20,
    spine=1,
)


@dataclass(frozen=True)
class SkeletonFrame:
    """One captured skeleton: joint positions plus their layout."""

    joints: np.ndarray
    layout: JointLayout
    timestamp: Optional[float] = None

    def __post_init__(self) -> None:
        joints = np.asarray(self.joints, dtype=np.float64)
        expected = (self.layout.joint_count, 3)
        if joints.shape != expected:
            raise DimensionMismatchError(
                f"joints shape {joints.shape} does not match layout shape {expected}"
            )
        object.__setattr__(self, "joints", joints)

    @property
    def is_valid(self) -> bool:
        """False when any coordinate is NaN or infinite (frame should be dropped)."""
        return bool(np.isfinite(self.joints).all())


def normalize_skeleton(frame: SkeletonFrame) -> np.ndarray:
    """Translation- and scale-normalized pose vector of length (K - 1) * 3.

    Joints are re-expressed relative to the hip center and divided by the
    shoulder-center-to-spine distance; the hip row is dropped. Raises
    :class:`DegenerateSkeletonError` when that distance is below
    :data:`DEGENERATE_SCALE`.
    """
    if not frame.is_valid:
        raise NumericalFaultError("numerical fault: non-finite joint coordinates")
    layout = frame.layout
    joints = frame.joints
    scale = float(
        np.linalg.norm(joints[layout.shoulder_center] - joints[layout.spine])
    )
    if scale < DEGENERATE_SCALE:
        raise DegenerateSkeletonError(
            f"degenerate skeleton: shoulder-to-spine distance {scale:.3g} is too small"
        )
    normalized = (joints - joints[layout.hip_center]) / scale
    kept = np.delete(normalized, layout.hip_center, axis=0)
    return kept.ravel()


def frame_weight(feature: np.ndarray, neutral: np.ndarray) -> float:
    """Relevance of a pose: mean per-joint distance to the neutral pose.

    Both arguments are normalized feature vectors from
    :func:`normalize_skeleton`. The result is floored at
    :data:`MIN_FRAME_WEIGHT` so resting poses still carry a little weight.
    """
    feature = np.asarray(feature, dtype=np.float64)
    neutral = np.asarray(neutral, dtype=np.float64)
    if feature.shape != neutral.shape or feature.ndim != 1:
        raise DimensionMismatchError(
            f"feature shape {feature.shape} does not match neutral shape {neutral.shape}"
        )
    if feature.size % 3 != 0:
        raise DimensionMismatchError(
            f"feature length {feature.size} is not a multiple of 3"
        )
    deltas = (feature - neutral).reshape(-1, 3)
    weight = float(np.linalg.norm(deltas, axis=1).mean())
    return max(weight, MIN_FRAME_WEIGHT)
