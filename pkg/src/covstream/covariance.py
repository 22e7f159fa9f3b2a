"""Weighted covariance descriptors over streaming feature vectors.

Each frame ``i`` of a stream carries a feature vector ``f_i`` and a relevance
weight ``xi_i``. On top of that, frames are discounted by age with a decay
factor ``eta``: at stream time ``t`` the total weight of frame ``i`` is
``psi_i = xi_i * eta**(t - i)``. The descriptor of the stream so far is the
weighted mean and the bias-corrected weighted covariance of the ``f_i`` under
the ``psi_i``.

Two equivalent routes are provided: :func:`batch_weighted_covariance`
recomputes the descriptor from all frames, while :func:`incremental_update`
advances a :class:`WeightedCovarianceState` by one frame in O(d^2) time and
O(1) memory regardless of how many frames came before. The two agree to
floating-point accuracy; the test suite pins that down.

With ``eta = 1`` and all weights equal the descriptor reduces to the ordinary
running mean and unbiased sample covariance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateStateError,
    DegenerateWeightsError,
    DimensionMismatchError,
    InsufficientFramesError,
    NumericalFaultError,
)

# Frames can never contribute less than this; keeps every weight strictly
# positive and the update denominators away from zero.
MIN_FRAME_WEIGHT = 1e-3


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def temporal_weight(decay: float, age: int) -> float:
    """Age-discount factor ``decay**age`` for a frame ``age`` steps old.

    ``age = 0`` (the newest frame) always maps to 1. ``decay`` must lie in
    [0, 1]; 1 disables temporal discounting entirely.
    """
    if not 0.0 <= decay <= 1.0:
        raise ValueError(f"decay must lie in [0, 1], got {decay}")
    if age < 0:
        raise ValueError(f"age must be nonnegative, got {age}")
    return float(decay) ** age


@dataclass(frozen=True)
class WeightedFrame:
    """One stream frame: a feature vector plus its relevance weight.

    Parameters
    ----------
    feature : numpy.ndarray
        1-D float vector. Must be finite.
    weight : float
        Relevance weight, at least :data:`MIN_FRAME_WEIGHT`.
    """

    feature: np.ndarray
    weight: float

    def __post_init__(self) -> None:
        feature = np.asarray(self.feature, dtype=np.float64)
        if feature.ndim != 1 or feature.size == 0:
            raise ValueError(f"feature must be a nonempty 1-D vector, got shape {feature.shape}")
        if not np.isfinite(feature).all():
            raise NumericalFaultError("numerical fault: non-finite feature vector")
        weight = float(self.weight)
        if not np.isfinite(weight) or weight < MIN_FRAME_WEIGHT:
            raise ValueError(f"weight must be finite and >= {MIN_FRAME_WEIGHT}, got {weight}")
        object.__setattr__(self, "feature", feature)
        object.__setattr__(self, "weight", weight)

    @property
    def dim(self) -> int:
        return self.feature.shape[0]


@dataclass(frozen=True)
class WeightedCovarianceState:
    """Sufficient statistics of a weighted covariance over a stream prefix.

    The state is a value: updates return new instances and never mutate.
    It can therefore be handed freely between threads, and independent
    streams may update their states concurrently.

    Attributes
    ----------
    cov : numpy.ndarray
        (d, d) symmetric bias-corrected weighted covariance.
    mean : numpy.ndarray
        (d,) weighted mean.
    weight_sum : float
        Total accumulated weight of all frames seen, after decay.
    weight_sq_sum : float
        Sum of squared normalized weights; drives the bias correction.
        Values approaching 1 mean a single frame dominates.
    decay : float
        Age-discount factor in [0, 1] the state was built with.
    frame_count : int
        Number of frames absorbed so far.
    """

    cov: np.ndarray
    mean: np.ndarray
    weight_sum: float
    weight_sq_sum: float
    decay: float
    frame_count: int

    def __post_init__(self) -> None:
        cov = np.asarray(self.cov, dtype=np.float64)
        mean = np.asarray(self.mean, dtype=np.float64)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"cov must be square, got shape {cov.shape}")
        if mean.ndim != 1 or mean.shape[0] != cov.shape[0]:
            raise ValueError(f"mean shape {mean.shape} does not match cov shape {cov.shape}")
        if not (np.isfinite(cov).all() and np.isfinite(mean).all()):
            raise NumericalFaultError("numerical fault: non-finite state")
        if not np.isfinite(self.weight_sum) or self.weight_sum <= 0.0:
            raise ValueError(f"weight_sum must be positive, got {self.weight_sum}")
        if not np.isfinite(self.weight_sq_sum) or self.weight_sq_sum < 0.0:
            raise ValueError(f"weight_sq_sum must be nonnegative, got {self.weight_sq_sum}")
        if not 0.0 <= self.decay <= 1.0:
            raise ValueError(f"decay must lie in [0, 1], got {self.decay}")
        if self.frame_count < 0:
            raise ValueError(f"frame_count must be nonnegative, got {self.frame_count}")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def readable(self) -> bool:
        """Whether cov/mean are meaningful (>= 2 frames, weights not collapsed)."""
        return self.frame_count >= 2 and self.weight_sq_sum < 1.0


def batch_weighted_covariance(
    frames: Sequence[WeightedFrame], decay: float
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Compute the weighted descriptor of a full stream from scratch.

    Returns ``(cov, mean, weight_sum, weight_sq_sum)`` where the newest frame
    is the last element of ``frames`` and ages run backwards from it.

    Raises
    ------
    InsufficientFramesError
        If fewer than two frames are given.
    DegenerateWeightsError
        If the weight pattern collapses onto a single effective frame
        (for example ``decay = 0``), which leaves no covariance information.
    """
    if not 0.0 <= decay <= 1.0:
        raise ValueError(f"decay must lie in [0, 1], got {decay}")
    t = len(frames)
    if t < 2:
        raise InsufficientFramesError(f"insufficient frames: need at least 2, got {t}")
    dim = frames[0].dim
    for frame in frames:
        if frame.dim != dim:
            raise DimensionMismatchError(
                f"frame dimension {frame.dim} does not match stream dimension {dim}"
            )
    features = np.stack([frame.feature for frame in frames])
    weights = np.array([frame.weight for frame in frames])
    ages = np.arange(t - 1, -1, -1, dtype=np.float64)
    psi = weights * float(decay) ** ages

    weight_sum = float(psi.sum())
    normalized = psi / weight_sum
    weight_sq_sum = float(normalized @ normalized)
    if weight_sq_sum >= 1.0:
        raise DegenerateWeightsError(
            "degenerate weights: a single frame carries all effective weight"
        )
    mean = normalized @ features
    centered = features - mean
    cov = (centered * normalized[:, None]).T @ centered / (1.0 - weight_sq_sum)
    return _symmetrize(cov), mean, weight_sum, weight_sq_sum


def initialize_state(frames: Sequence[WeightedFrame], decay: float) -> WeightedCovarianceState:
    """Build a readable :class:`WeightedCovarianceState` from an initial window."""
    cov, mean, weight_sum, weight_sq_sum = batch_weighted_covariance(frames, decay)
    return WeightedCovarianceState(
        cov=cov,
        mean=mean,
        weight_sum=weight_sum,
        weight_sq_sum=weight_sq_sum,
        decay=decay,
        frame_count=len(frames),
    )


def incremental_update(
    state: WeightedCovarianceState, frame: WeightedFrame
) -> WeightedCovarianceState:
    """Absorb one new frame into the descriptor in O(d^2).

    Equivalent to recomputing :func:`batch_weighted_covariance` over the whole
    stream with every prior weight multiplied by ``state.decay``. The rank-one
    correction uses the deviation of the new feature from the previous mean,
    so a frame exactly at the mean leaves the mean unchanged and only rescales
    the covariance.

    Raises
    ------
    ValueError
        If the state is not readable.
    DimensionMismatchError
        If the frame dimension does not match the state.
    DegenerateStateError
        If all prior weight has vanished (``decay * weight_sum`` is zero),
        leaving the update rule without a usable denominator.
    """
    if not state.readable:
        raise ValueError(
            "state is not readable: initialize from at least 2 frames with "
            "non-collapsed weights before updating"
        )
    if frame.dim != state.dim:
        raise DimensionMismatchError(
            f"frame dimension {frame.dim} does not match state dimension {state.dim}"
        )
    w = state.decay * state.weight_sum
    xi = frame.weight
    s2 = state.weight_sq_sum
    denom = 2.0 * w * xi + w * w * (1.0 - s2)
    if denom <= 0.0:
        raise DegenerateStateError(
            "degenerate state: prior weight vanished, cannot apply incremental update"
        )
    delta = frame.feature - state.mean
    cov = (w * (1.0 - s2) * (xi + w) / denom) * state.cov + (w * xi / denom) * np.outer(
        delta, delta
    )
    mean = (w * state.mean + xi * frame.feature) / (w + xi)
    new_weight_sum = w + xi
    new_weight_sq_sum = (w * w * s2 + xi * xi) / (new_weight_sum * new_weight_sum)
    return WeightedCovarianceState(
        cov=_symmetrize(cov),
        mean=mean,
        weight_sum=new_weight_sum,
        weight_sq_sum=new_weight_sq_sum,
        decay=state.decay,
        frame_count=state.frame_count + 1,
    )
