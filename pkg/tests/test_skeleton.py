import numpy as np
import pytest

import covstream as cs
from covstream.covariance import MIN_FRAME_WEIGHT

LAYOUT = cs.JointLayout(
    names=("hip_center", "shoulder_center", "spine", "hand"),
    hip_center=0,
    shoulder_center=1,
    spine=2,
)


def test_layout_properties():
    assert LAYOUT.joint_count == 4
    assert LAYOUT.feature_dim == 9
    assert cs.KINECT20_LAYOUT.joint_count == 20
    assert cs.KINECT20_LAYOUT.feature_dim == 57
    assert cs.KINECT25_LAYOUT.joint_count == 25
    assert cs.KINECT25_LAYOUT.feature_dim == 72


def test_layout_validation():
    with pytest.raises(ValueError):
        cs.JointLayout(names=("a", "b", "c"), hip_center=0, shoulder_center=1, spine=2)
    with pytest.raises(ValueError):
        cs.JointLayout(
            names=("a", "b", "c", "d"), hip_center=0, shoulder_center=0, spine=2
        )
    with pytest.raises(ValueError):
        cs.JointLayout(
            names=("a", "a", "c", "d"), hip_center=0, shoulder_center=1, spine=2
        )


def test_normalize_hand_example():
    # Shoulder center and spine sit one unit apart, so distances pass through.
    joints = np.array(
        [
            [1.0, 1.0, 1.0],  # hip center
            [1.0, 3.0, 1.0],  # shoulder center
            [1.0, 2.0, 1.0],  # spine
            [2.0, 1.0, 1.0],  # hand
        ]
    )
    feature = cs.normalize_skeleton(cs.SkeletonFrame(joints, LAYOUT))
    expected = np.array([0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0])
    assert np.allclose(feature, expected, atol=1e-15)
    assert feature.shape == (LAYOUT.feature_dim,)


def test_normalize_similarity_invariance():
    rng = np.random.default_rng(71)
    joints = rng.standard_normal((4, 3))
    base = cs.normalize_skeleton(cs.SkeletonFrame(joints, LAYOUT))
    moved = cs.normalize_skeleton(
        cs.SkeletonFrame(2.0 * joints + np.array([5.0, -3.0, 11.0]), LAYOUT)
    )
    assert np.allclose(base, moved, atol=1e-12)


def test_normalize_degenerate_skeleton():
    joints = np.zeros((4, 3))
    joints[3] = (1.0, 0.0, 0.0)
    with pytest.raises(cs.DegenerateSkeletonError):
        cs.normalize_skeleton(cs.SkeletonFrame(joints, LAYOUT))


def test_invalid_frame_detected_and_rejected():
    joints = np.zeros((4, 3))
    joints[2] = (0.0, 1.0, 0.0)
    joints[1, 0] = np.nan
    frame = cs.SkeletonFrame(joints, LAYOUT)
    assert not frame.is_valid
    with pytest.raises(cs.NumericalFaultError):
        cs.normalize_skeleton(frame)


def test_frame_weight_hand_values():
    neutral = np.zeros(9)
    assert cs.frame_weight(neutral, neutral) == MIN_FRAME_WEIGHT
    # One joint displaced by 3, the other two at rest: mean distance 1.
    feature = np.array([3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    assert cs.frame_weight(feature, neutral) == pytest.approx(1.0, abs=1e-15)


def test_frame_weight_scales_with_displacement():
    rng = np.random.default_rng(73)
    neutral = rng.standard_normal(9)
    feature = neutral + rng.standard_normal(9)
    w1 = cs.frame_weight(feature, neutral)
    w2 = cs.frame_weight(neutral + 2.0 * (feature - neutral), neutral)
    assert w2 == pytest.approx(2.0 * w1, rel=1e-12)


def test_frame_weight_dimension_check():
    with pytest.raises(cs.DimensionMismatchError):
        cs.frame_weight(np.zeros(9), np.zeros(6))
