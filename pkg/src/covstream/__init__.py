"""Streaming weighted covariance descriptors with Stein-metric recognition
of skeleton action streams."""
from __future__ import annotations

from .covariance import (
    MIN_FRAME_WEIGHT,
    WeightedCovarianceState,
    WeightedFrame,
    batch_weighted_covariance,
    incremental_update,
    initialize_state,
    temporal_weight,
)
from .errors import (
    AffinityUndefinedError,
    CovstreamError,
    DataError,
    DegenerateSkeletonError,
    DegenerateStateError,
    DegenerateWeightsError,
    DimensionMismatchError,
    FormatError,
    InseparableSynthesisError,
    InsufficientFramesError,
    IrreparablySingularError,
    NotPositiveDefiniteError,
    NumericalError,
    NumericalFaultError,
)
from .evaluate import (
    BenchResult,
    ClassScores,
    MetricsReport,
    Segment,
    SegmentScore,
    StreamAnnotation,
    SynthResult,
    aggregate_scores,
    bench_update,
    evaluate_streams,
    score_stream,
    stitch,
    synth_classes,
    synthetic_layout,
)
from .geometry import (
    ProjectionConfig,
    ProjectionResult,
    affinity_objective,
    affinity_objective_gradient,
    build_affinity,
    learn_projection,
    logdet_pd,
    orthonormality_error,
    project,
    random_orthonormal,
    random_spd,
    regularize,
    stein_divergence,
    stein_pairwise,
)
from .recognize import (
    ActionModel,
    OnlineRecognizer,
    RecognitionEvent,
    RecognizerConfig,
    RecognizerModel,
    RecognizerState,
    TrainResult,
    class_distance,
    run_stream,
    select_label,
    step,
    train,
)
from .skeleton import (
    KINECT20_LAYOUT,
    KINECT25_LAYOUT,
    JointLayout,
    SkeletonFrame,
    frame_weight,
    normalize_skeleton,
)

__version__ = "0.1.0"

__all__ = [
    "MIN_FRAME_WEIGHT",
    "WeightedCovarianceState",
    "WeightedFrame",
    "batch_weighted_covariance",
    "incremental_update",
    "initialize_state",
    "temporal_weight",
    "CovstreamError",
    "DataError",
    "NumericalError",
    "AffinityUndefinedError",
    "DegenerateSkeletonError",
    "DegenerateStateError",
    "DegenerateWeightsError",
    "DimensionMismatchError",
    "FormatError",
    "InseparableSynthesisError",
    "InsufficientFramesError",
    "IrreparablySingularError",
    "NotPositiveDefiniteError",
    "NumericalFaultError",
    "BenchResult",
    "ClassScores",
    "MetricsReport",
    "Segment",
    "SegmentScore",
    "StreamAnnotation",
    "SynthResult",
    "aggregate_scores",
    "bench_update",
    "evaluate_streams",
    "score_stream",
    "stitch",
    "synth_classes",
    "synthetic_layout",
    "ProjectionConfig",
    "ProjectionResult",
    "affinity_objective",
    "affinity_objective_gradient",
    "build_affinity",
    "learn_projection",
    "logdet_pd",
    "orthonormality_error",
    "project",
    "random_orthonormal",
    "random_spd",
    "regularize",
    "stein_divergence",
    "stein_pairwise",
    "ActionModel",
    "OnlineRecognizer",
    "RecognitionEvent",
    "RecognizerConfig",
    "RecognizerModel",
    "RecognizerState",
    "TrainResult",
    "class_distance",
    "run_stream",
    "select_label",
    "step",
    "train",
    "KINECT20_LAYOUT",
    "KINECT25_LAYOUT",
    "JointLayout",
    "SkeletonFrame",
    "frame_weight",
    "normalize_skeleton",
]
