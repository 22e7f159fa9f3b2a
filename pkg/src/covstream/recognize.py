"""Online action recognition over skeleton streams.

Training turns each labeled instance (a short run of skeleton frames) into a
regularized weighted covariance descriptor, learns a discriminative
projection from the labeled set, and stores the projected descriptors per
class. Recognition consumes an unsegmented stream one frame at a time: the
running weighted covariance is projected, compared against every class by
minimum Stein divergence, and a label is maintained. The label may only
switch at detected action boundaries, which fire when the smoothed standard
deviation of the class distances makes a strict local minimum while the
nearest class disagrees with the current label.

All per-frame work is O(d^2 + L * m^3) with no dependence on stream length.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .covariance import (
    WeightedCovarianceState,
    WeightedFrame,
    batch_weighted_covariance,
    incremental_update,
    initialize_state,
)
from .errors import AffinityUndefinedError, DimensionMismatchError
from .geometry import (
    ProjectionConfig,
    ProjectionResult,
    learn_projection,
    project,
    regularize,
    stein_divergence,
)
from .skeleton import JointLayout, SkeletonFrame, frame_weight, normalize_skeleton

logger = logging.getLogger(__name__)

INITIAL_DECISION = "initial_decision"
BOUNDARY = "boundary"
CONTINUATION = "continuation"

# Default projected dimension when the config leaves it unset.
DEFAULT_TARGET_DIM = 10


@dataclass(frozen=True)
class RecognizerConfig:
    """Tunables for training and online recognition.

    Attributes
    ----------
    decay : float
        Age-discount factor for the running covariance; 1 disables
        temporal forgetting.
    init_frames : int
        Frames buffered before the first decision (the initialization
        window). The first event fires once this many valid frames arrived.
    target_dim : int or None
        Projected descriptor size m; None picks min(10, feature_dim).
    std_window : int
        Odd window length over the smoothed distance-spread series used for
        boundary detection.
    epsilon : float
        Diagonal shift applied to descriptors before divergence evaluation.
    reset_on_boundary : bool
        When True, a boundary throws the running state away and re-buffers
        ``init_frames`` frames starting at the boundary frame.
    use_frame_weights : bool
        When False every frame gets unit relevance weight (ablation switch).
    projection : ProjectionConfig
        Optimizer settings for projection learning.
    """

    decay: float = 0.95
    init_frames: int = 30
    target_dim: Optional[int] = None
    std_window: int = 5
    epsilon: float = 1e-6
    reset_on_boundary: bool = False
    use_frame_weights: bool = True
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)

    def __post_init__(self) -> None:
        if not 0.0 <= self.decay <= 1.0:
            raise ValueError(f"decay must lie in [0, 1], got {self.decay}")
        if self.init_frames < 2:
            raise ValueError(f"init_frames must be at least 2, got {self.init_frames}")
        if self.target_dim is not None and self.target_dim < 1:
            raise ValueError(f"target_dim must be positive, got {self.target_dim}")
        if self.std_window < 3 or self.std_window % 2 == 0:
            raise ValueError(f"std_window must be odd and >= 3, got {self.std_window}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class ActionModel:
    """All projected descriptors of one action class."""

    label: int
    descriptors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.descriptors:
            raise ValueError(f"class {self.label} has no descriptors")


@dataclass(frozen=True)
class RecognizerModel:
    """Everything needed to run recognition: classes, projection, pose context."""

    models: tuple[ActionModel, ...]
    projection: np.ndarray
    neutral_feature: np.ndarray
    layout: JointLayout
    config: RecognizerConfig

    def __post_init__(self) -> None:
        labels = [m.label for m in self.models]
        if labels != sorted(labels) or len(set(labels)) != len(labels):
            raise ValueError("class models must be sorted by label and unique")
        projection = np.asarray(self.projection, dtype=np.float64)
        neutral = np.asarray(self.neutral_feature, dtype=np.float64)
        if projection.ndim != 2:
            raise ValueError(f"projection must be 2-D, got shape {projection.shape}")
        if neutral.shape != (self.layout.feature_dim,):
            raise DimensionMismatchError(
                f"neutral feature length {neutral.shape} does not match layout "
                f"feature dim {self.layout.feature_dim}"
            )
        if projection.shape[0] != self.layout.feature_dim:
            raise DimensionMismatchError(
                f"projection rows {projection.shape[0]} do not match layout "
                f"feature dim {self.layout.feature_dim}"
            )
        object.__setattr__(self, "projection", projection)
        object.__setattr__(self, "neutral_feature", neutral)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(m.label for m in self.models)


@dataclass(frozen=True)
class TrainResult:
    model: RecognizerModel
    diagnostics: ProjectionResult
    skipped_instances: int


@dataclass(frozen=True)
class RecognitionEvent:
    """One per-frame decision. ``distances`` holds the full per-class vector."""

    frame_index: int
    label: int
    kind: str
    min_distance: float
    std: float
    distances: np.ndarray


@dataclass(frozen=True)
class RecognizerState:
    """Value-type running state of one stream; step() returns new instances."""

    frame_index: int = -1
    buffer: tuple[WeightedFrame, ...] = ()
    cov_state: Optional[WeightedCovarianceState] = None
    distance_history: tuple[np.ndarray, ...] = ()
    std_history: tuple[float, ...] = ()
    current_label: Optional[int] = None
    dropped_frames: int = 0


def class_distance(descriptor: np.ndarray, model: ActionModel) -> float:
    """Distance from a projected descriptor to a class: min over its instances."""
    return min(stein_divergence(descriptor, ref) for ref in model.descriptors)


def select_label(labels: Sequence[int], distances: np.ndarray) -> int:
    """Label of the smallest distance; ties break to the earliest (lowest) label."""
    return int(labels[int(np.argmin(distances))])


def train(
    instances: Sequence[tuple[int, Sequence[SkeletonFrame]]],
    neutral: SkeletonFrame,
    config: Optional[RecognizerConfig] = None,
) -> TrainResult:
    """Build a :class:`RecognizerModel` from labeled instances.

    Instances with fewer than two usable (valid, normalizable) frames are
    skipped with a warning. At least two distinct classes must survive,
    otherwise the affinity graph for projection learning is undefined.
    """
    config = config or RecognizerConfig()
    neutral_feature = normalize_skeleton(neutral)
    descriptors: list[np.ndarray] = []
    labels: list[int] = []
    skipped = 0
    for index, (label, frames) in enumerate(instances):
        weighted: list[WeightedFrame] = []
        for frame in frames:
            if frame.layout != neutral.layout:
                raise DimensionMismatchError(
                    "instance layout does not match the neutral pose layout"
                )
            if not frame.is_valid:
                continue
            feature = normalize_skeleton(frame)
            weight = frame_weight(feature, neutral_feature) if config.use_frame_weights else 1.0
            weighted.append(WeightedFrame(feature, weight))
        if len(weighted) < 2:
            logger.warning(
                "skipping instance %d (class %d): %d usable frames", index, label, len(weighted)
            )
            skipped += 1
            continue
        cov, _, _, _ = batch_weighted_covariance(weighted, config.decay)
        descriptors.append(regularize(cov, config.epsilon))
        labels.append(int(label))
    if len(set(labels)) < 2:
        raise AffinityUndefinedError(
            "affinity undefined: need at least two distinct classes with usable instances"
        )
    n = descriptors[0].shape[0]
    target_dim = config.target_dim if config.target_dim is not None else min(DEFAULT_TARGET_DIM, n)
    if target_dim > n:
        raise ValueError(f"target_dim {target_dim} exceeds feature dimension {n}")
    config = replace(config, target_dim=target_dim)
    result = learn_projection(descriptors, labels, target_dim, config.projection)
    projected = [project(result.projection, x) for x in descriptors]
    grouped: dict[int, list[np.ndarray]] = {}
    for label, desc in zip(labels, projected):
        grouped.setdefault(label, []).append(desc)
    models = tuple(
        ActionModel(label=label, descriptors=tuple(grouped[label]))
        for label in sorted(grouped)
    )
    model = RecognizerModel(
        models=models,
        projection=result.projection,
        neutral_feature=neutral_feature,
        layout=neutral.layout,
        config=config,
    )
    return TrainResult(model=model, diagnostics=result, skipped_instances=skipped)


def _classify(
    cov: np.ndarray, model: RecognizerModel
) -> tuple[np.ndarray, int, float, float]:
    descriptor = regularize(project(model.projection, cov), model.config.epsilon)
    distances = np.array([class_distance(descriptor, m) for m in model.models])
    label = select_label(model.labels, distances)
    return distances, label, float(distances.min()), float(distances.std())


def _boundary_signal(std_history: tuple[float, ...], window: int) -> bool:
    """Strict local minimum test on the 3-point-smoothed spread series.

    The newest smoothable position is one frame behind the current one, so a
    detected minimum sits ceil(window / 2) frames in the past.
    """
    need = window + 2
    if len(std_history) < need:
        return False
    raw = std_history[-need:]
    smoothed = [(raw[k - 1] + raw[k] + raw[k + 1]) / 3.0 for k in range(1, need - 1)]
    center = smoothed[window // 2]
    return center < smoothed[0] and center < smoothed[-1]


def step(
    state: RecognizerState, frame: SkeletonFrame, model: RecognizerModel
) -> tuple[RecognizerState, Optional[RecognitionEvent]]:
    """Advance one frame; returns the new state and an event once decisions flow.

    Invalid frames (non-finite joints) are dropped: the frame index still
    advances and the drop counter increments, but nothing else changes.
    """
    config = model.config
    frame_index = state.frame_index + 1
    if not frame.is_valid:
        return (
            replace(state, frame_index=frame_index, dropped_frames=state.dropped_frames + 1),
            None,
        )
    if frame.layout != model.layout:
        raise DimensionMismatchError("stream layout does not match the model layout")
    feature = normalize_skeleton(frame)
    weight = (
        frame_weight(feature, model.neutral_feature) if config.use_frame_weights else 1.0
    )
    observed = WeightedFrame(feature, weight)
    history_cap = config.std_window + 2

    if state.cov_state is None:
        buffer = state.buffer + (observed,)
        if len(buffer) < config.init_frames:
            return replace(state, frame_index=frame_index, buffer=buffer), None
        cov_state = initialize_state(buffer, config.decay)
        distances, label, min_distance, spread = _classify(cov_state.cov, model)
        event = RecognitionEvent(
            frame_index=frame_index,
            label=label,
            kind=INITIAL_DECISION,
            min_distance=min_distance,
            std=spread,
            distances=distances,
        )
        new_state = RecognizerState(
            frame_index=frame_index,
            buffer=(),
            cov_state=cov_state,
            distance_history=(distances,),
            std_history=(spread,),
            current_label=label,
            dropped_frames=state.dropped_frames,
        )
        return new_state, event

    cov_state = incremental_update(state.cov_state, observed)
    distances, nearest, min_distance, spread = _classify(cov_state.cov, model)
    distance_history = (state.distance_history + (distances,))[-history_cap:]
    std_history = (state.std_history + (spread,))[-history_cap:]

    is_boundary = (
        _boundary_signal(std_history, config.std_window)
        and nearest != state.current_label
    )
    if is_boundary:
        event = RecognitionEvent(
            frame_index=frame_index,
            label=nearest,
            kind=BOUNDARY,
            min_distance=min_distance,
            std=spread,
            distances=distances,
        )
        if config.reset_on_boundary:
            new_state = RecognizerState(
                frame_index=frame_index,
                buffer=(observed,),
                cov_state=None,
                distance_history=(),
                std_history=(),
                current_label=nearest,
                dropped_frames=state.dropped_frames,
            )
            return new_state, event
        new_state = replace(
            state,
            frame_index=frame_index,
            cov_state=cov_state,
            distance_history=distance_history,
            std_history=std_history,
            current_label=nearest,
        )
        return new_state, event

    event = RecognitionEvent(
        frame_index=frame_index,
        label=int(state.current_label),
        kind=CONTINUATION,
        min_distance=min_distance,
        std=spread,
        distances=distances,
    )
    new_state = replace(
        state,
        frame_index=frame_index,
        cov_state=cov_state,
        distance_history=distance_history,
        std_history=std_history,
    )
    return new_state, event


def run_stream(
    frames: Sequence[SkeletonFrame],
    model: RecognizerModel,
    state: Optional[RecognizerState] = None,
) -> tuple[list[RecognitionEvent], RecognizerState]:
    """Run recognition over a whole stream, collecting every emitted event."""
    state = state or RecognizerState()
    events: list[RecognitionEvent] = []
    for frame in frames:
        state, event = step(state, frame, model)
        if event is not None:
            events.append(event)
    if not events:
        logger.warning(
            "stream ended after %d frames with no decisions (initialization "
            "window is %d valid frames)",
            state.frame_index + 1,
            model.config.init_frames,
        )
    return events, state


class OnlineRecognizer:
    """Stateful convenience wrapper around :func:`step` for one stream."""

    def __init__(self, model: RecognizerModel):
        self.model = model
        self.state = RecognizerState()

    def step(self, frame: SkeletonFrame) -> Optional[RecognitionEvent]:
        self.state, event = step(self.state, frame, self.model)
        return event

    @property
    def current_label(self) -> Optional[int]:
        return self.state.current_label
