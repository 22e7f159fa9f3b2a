"""Evaluation harness: ground truth handling, online metrics, synthetic data,
and a runtime benchmark for the covariance update.

Metrics follow the online-recognition convention: a stream is annotated with
contiguous labeled segments, the recognizer emits per-frame label events, and
each segment is scored by when (if ever) its true label first appeared.

* latency: offset of the first correct frame divided by segment length,
  averaged over detected segments;
* miss rate: fraction of segments whose label never appeared while they
  were active;
* error rate: fraction of frames inside a detected segment carrying a wrong
  (or no) label, including the run-in before the first correct frame.

The scorer here works on event intervals; the test suite checks it against a
brute-force per-frame implementation.
"""
from __future__ import annotations

import logging
import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .covariance import (
    WeightedFrame,
    batch_weighted_covariance,
    incremental_update,
    initialize_state,
)
from .errors import DataError, DimensionMismatchError, InseparableSynthesisError
from .geometry import random_spd, stein_divergence
from .recognize import RecognitionEvent, RecognizerModel, run_stream
from .skeleton import JointLayout, SkeletonFrame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segment:
    """Half-open labeled span [start, end) of a stream."""

    start: int
    end: int
    label: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"invalid segment bounds [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class StreamAnnotation:
    """Ground truth for one stream: contiguous, ordered, non-overlapping segments."""

    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        segments = tuple(self.segments)
        if not segments:
            raise ValueError("annotation needs at least one segment")
        for prev, cur in zip(segments, segments[1:]):
            if cur.start != prev.end:
                raise ValueError(
                    f"segments must be contiguous: [{prev.start}, {prev.end}) "
                    f"followed by [{cur.start}, {cur.end})"
                )
        object.__setattr__(self, "segments", segments)

    @property
    def frame_count(self) -> int:
        return self.segments[-1].end

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(sorted({s.label for s in self.segments}))


@dataclass(frozen=True)
class SegmentScore:
    """Outcome for one segment; latency and error_rate are None when missed."""

    segment: Segment
    detected: bool
    latency: Optional[float]
    error_rate: Optional[float]


def score_stream(
    events: Sequence[RecognitionEvent], annotation: StreamAnnotation
) -> list[SegmentScore]:
    """Score one stream's events against its annotation.

    The label in effect at frame f is the label of the last event at or
    before f; frames before the first event have no label and count as
    errors. Works on event intervals, never materializing per-frame arrays.
    """
    frames = [e.frame_index for e in events]
    labels = [e.label for e in events]
    for a, b in zip(frames, frames[1:]):
        if b <= a:
            raise ValueError("events must have strictly increasing frame indices")
    if frames and (frames[0] < 0 or frames[-1] >= annotation.frame_count):
        raise ValueError(
            f"event frame {frames[-1] if frames[-1] >= annotation.frame_count else frames[0]} "
            f"outside the annotated range [0, {annotation.frame_count})"
        )
    scores = []
    for seg in annotation.segments:
        # Label in effect when the segment starts.
        at_start = bisect_right(frames, seg.start) - 1
        effective = labels[at_start] if at_start >= 0 else None
        if effective == seg.label:
            first_correct = seg.start
        else:
            first_correct = None
            lo = bisect_right(frames, seg.start)
            hi = bisect_left(frames, seg.end)
            for k in range(lo, hi):
                if labels[k] == seg.label:
                    first_correct = frames[k]
                    break
        if first_correct is None:
            scores.append(SegmentScore(seg, detected=False, latency=None, error_rate=None))
            continue
        latency = (first_correct - seg.start) / seg.length
        # Wrong frames: walk the piecewise-constant label over the segment.
        wrong = 0
        lo = bisect_right(frames, seg.start)
        hi = bisect_left(frames, seg.end)
        cursor = seg.start
        current = effective
        for k in range(lo, hi):
            if current != seg.label:
                wrong += frames[k] - cursor
            cursor = frames[k]
            current = labels[k]
        if current != seg.label:
            wrong += seg.end - cursor
        scores.append(
            SegmentScore(seg, detected=True, latency=latency, error_rate=wrong / seg.length)
        )
    return scores


@dataclass
class ClassScores:
    label: int
    segment_count: int
    detected_count: int
    miss_rate: float
    mean_latency: Optional[float]
    mean_error_rate: Optional[float]


@dataclass
class MetricsReport:
    """Aggregated metrics over one or more scored streams.

    Pooled values average over segments; macro values average per-class
    means (classes with no detected segment are left out of latency/error
    macros).
    """

    segment_count: int
    detected_count: int
    miss_rate: float
    mean_latency: Optional[float]
    mean_error_rate: Optional[float]
    per_class: dict[int, ClassScores]
    macro_miss_rate: float
    macro_latency: Optional[float]
    macro_error_rate: Optional[float]
    dropped_frames: int = 0
    config: dict = field(default_factory=dict)


def _mean(values: list[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def aggregate_scores(
    stream_scores: Sequence[Sequence[SegmentScore]],
    dropped_frames: int = 0,
    config: Optional[Mapping] = None,
) -> MetricsReport:
    """Combine per-stream segment scores into one report."""
    flat = [s for scores in stream_scores for s in scores]
    if not flat:
        raise DataError("no streams: nothing to aggregate")
    by_class: dict[int, list[SegmentScore]] = {}
    for s in flat:
        by_class.setdefault(s.segment.label, []).append(s)
    per_class = {}
    for label in sorted(by_class):
        scores = by_class[label]
        detected = [s for s in scores if s.detected]
        per_class[label] = ClassScores(
            label=label,
            segment_count=len(scores),
            detected_count=len(detected),
            miss_rate=(len(scores) - len(detected)) / len(scores),
            mean_latency=_mean([s.latency for s in detected]),
            mean_error_rate=_mean([s.error_rate for s in detected]),
        )
    detected_all = [s for s in flat if s.detected]
    macro_lat = _mean([c.mean_latency for c in per_class.values() if c.mean_latency is not None])
    macro_err = _mean(
        [c.mean_error_rate for c in per_class.values() if c.mean_error_rate is not None]
    )
    return MetricsReport(
        segment_count=len(flat),
        detected_count=len(detected_all),
        miss_rate=(len(flat) - len(detected_all)) / len(flat),
        mean_latency=_mean([s.latency for s in detected_all]),
        mean_error_rate=_mean([s.error_rate for s in detected_all]),
        per_class=per_class,
        macro_miss_rate=_mean([c.miss_rate for c in per_class.values()]),
        macro_latency=macro_lat,
        macro_error_rate=macro_err,
        dropped_frames=dropped_frames,
        config=dict(config) if config else {},
    )


def evaluate_streams(
    model: RecognizerModel,
    streams: Sequence[tuple[Sequence[SkeletonFrame], StreamAnnotation]],
    config: Optional[Mapping] = None,
) -> MetricsReport:
    """Run recognition over annotated streams and aggregate the metrics."""
    if not streams:
        raise DataError("no streams: the evaluation manifest is empty")
    all_scores = []
    dropped = 0
    for frames, annotation in streams:
        if len(frames) != annotation.frame_count:
            raise DimensionMismatchError(
                f"stream has {len(frames)} frames but annotation covers "
                f"{annotation.frame_count}"
            )
        events, state = run_stream(frames, model)
        all_scores.append(score_stream(events, annotation))
        dropped += state.dropped_frames
    return aggregate_scores(all_scores, dropped_frames=dropped, config=config)


def stitch(
    instances: Sequence[tuple[int, Sequence[SkeletonFrame]]], seed: int
) -> tuple[list[SkeletonFrame], StreamAnnotation]:
    """Concatenate instances in a seeded-random order with ground truth."""
    if not instances:
        raise DataError("no streams: nothing to stitch")
    order = np.random.default_rng(seed).permutation(len(instances))
    frames: list[SkeletonFrame] = []
    segments: list[Segment] = []
    for idx in order:
        label, inst = instances[int(idx)]
        segments.append(Segment(len(frames), len(frames) + len(inst), int(label)))
        frames.extend(inst)
    return frames, StreamAnnotation(tuple(segments))


def synthetic_layout(feature_dim: int) -> JointLayout:
    """Layout for synthetic skeletons: 3 reference joints + feature_dim/3 more."""
    if feature_dim < 3 or feature_dim % 3 != 0:
        raise ValueError(f"feature_dim must be a positive multiple of 3, got {feature_dim}")
    action = feature_dim // 3
    names = ("hip_center", "shoulder_center", "spine") + tuple(
        f"joint_{i:02d}" for i in range(action)
    )
    return JointLayout(names=names, hip_center=0, shoulder_center=1, spine=2)


@dataclass(frozen=True)
class SynthResult:
    """Synthetic world: labeled instances plus the neutral pose that made them."""

    instances: tuple[tuple[int, tuple[SkeletonFrame, ...]], ...]
    neutral: SkeletonFrame
    layout: JointLayout
    class_means: tuple[np.ndarray, ...]
    class_covs: tuple[np.ndarray, ...]


# Reference joints in canonical coordinates. Shoulder center and spine sit at
# unit distance so normalization recovers action coordinates unchanged.
_REF_HIP = np.array([0.0, 0.0, 0.0])
_REF_SHOULDER = np.array([0.0, 0.6, 0.0])
_REF_SPINE = np.array([0.0, -0.4, 0.0])


def synth_classes(
    n_classes: int,
    feature_dim: int,
    frames_per_instance: int,
    instances_per_class: int,
    seed: int,
    separation: float = 2.0,
    mean_scale: float = 2.5,
    noise_scale: tuple[float, float] = (0.03, 0.4),
    ramp_fraction: float = 0.1,
    ref_jitter: float = 0.02,
    max_retries: int = 20,
) -> SynthResult:
    """Generate separable synthetic action classes as skeleton streams.

    Every class is a Gaussian over the action-joint coordinates with its own
    mean pose and covariance; instances taper from and to the neutral pose
    over a short ramp, so boundary frames look like rest. Each instance gets
    a random rigid offset and scale that normalization must undo. Class
    covariances are redrawn until all pairwise Stein divergences clear
    ``separation``; failing that after ``max_retries`` redraws raises
    :class:`InseparableSynthesisError`.

    ``feature_dim`` counts only the action joints (a multiple of 3); the
    emitted skeletons carry 3 extra reference joints, so descriptors built
    from them live in ``feature_dim + 6`` dimensions. Reference joints get a
    touch of sensor-style jitter (``ref_jitter``) so no feature dimension is
    exactly constant.
    """
    if n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {n_classes}")
    if frames_per_instance < 4:
        raise ValueError(f"need at least 4 frames per instance, got {frames_per_instance}")
    if instances_per_class < 1:
        raise ValueError(f"need at least 1 instance per class, got {instances_per_class}")
    layout = synthetic_layout(feature_dim)
    rng = np.random.default_rng(seed)
    n_action = feature_dim // 3

    # Neutral action pose: a fixed asymmetric rest position.
    base = np.stack(
        [np.array([0.25 * (j + 1), -0.1 * j, 0.1]) for j in range(n_action)]
    ).ravel()

    for attempt in range(max_retries + 1):
        means = []
        covs = []
        for _ in range(n_classes):
            direction = rng.standard_normal(feature_dim)
            direction /= np.linalg.norm(direction)
            means.append(base + mean_scale * direction)
            covs.append(random_spd(feature_dim, rng, eig_range=(noise_scale[0] ** 2, noise_scale[1] ** 2)))
        min_div = min(
            stein_divergence(covs[i], covs[j])
            for i in range(n_classes)
            for j in range(i + 1, n_classes)
        )
        min_mean_gap = min(
            float(np.linalg.norm(means[i] - means[j]))
            for i in range(n_classes)
            for j in range(i + 1, n_classes)
        )
        if min_div >= separation and min_mean_gap >= 0.7 * mean_scale:
            break
        logger.debug(
            "synth redraw %d: min divergence %.3g, min mean gap %.3g",
            attempt, min_div, min_mean_gap,
        )
    else:
        raise InseparableSynthesisError(
            f"inseparable synthesis: could not reach divergence {separation} "
            f"between {n_classes} classes after {max_retries} redraws"
        )

    chols = [np.linalg.cholesky(c) for c in covs]
    ramp = max(1, round(ramp_fraction * frames_per_instance))
    instances = []
    for label in range(1, n_classes + 1):
        mean = means[label - 1]
        chol = chols[label - 1]
        for _ in range(instances_per_class):
            offset = rng.normal(0.0, 2.0, size=3)
            scale = rng.uniform(0.8, 1.5)
            frames = []
            for k in range(frames_per_instance):
                envelope = min(1.0, (k + 1) / ramp, (frames_per_instance - k) / ramp)
                noise = chol @ rng.standard_normal(feature_dim)
                action = base + envelope * (mean - base + noise)
                refs = np.vstack([_REF_HIP, _REF_SHOULDER, _REF_SPINE])
                refs = refs + rng.normal(0.0, ref_jitter, size=refs.shape)
                joints = np.vstack([refs, action.reshape(n_action, 3)])
                frames.append(SkeletonFrame(joints * scale + offset, layout))
            instances.append((label, tuple(frames)))

    neutral_joints = np.vstack([_REF_HIP, _REF_SHOULDER, _REF_SPINE, base.reshape(n_action, 3)])
    neutral = SkeletonFrame(neutral_joints, layout)
    return SynthResult(
        instances=tuple(instances),
        neutral=neutral,
        layout=layout,
        class_means=tuple(means),
        class_covs=tuple(covs),
    )


@dataclass(frozen=True)
class BenchResult:
    """Median per-call seconds for the incremental update and the batch
    recomputation at a set of stream-length checkpoints."""

    dim: int
    decay: float
    incremental: tuple[tuple[int, float], ...]
    batch: tuple[tuple[int, float], ...]


def bench_update(
    dim: int,
    total_frames: int,
    decay: float = 0.95,
    checkpoints: Optional[Sequence[int]] = None,
    repetitions: int = 5,
    inner_loops: int = 50,
    seed: int = 0,
) -> BenchResult:
    """Time one incremental update vs a full batch recomputation.

    The incremental figure at checkpoint t is the median over ``repetitions``
    of the mean over ``inner_loops`` applications of the update to the state
    built from the first t frames; it should be flat in t. The batch figure
    recomputes the descriptor over the first t frames and grows with t. The
    harness itself runs on one thread and discards a warmup per measurement.
    """
    if total_frames < 4:
        raise ValueError(f"total_frames must be at least 4, got {total_frames}")
    if checkpoints is None:
        checkpoints = sorted({c for c in (100, 1000, 10000, total_frames) if c <= total_frames})
    else:
        checkpoints = sorted(set(int(c) for c in checkpoints))
        if any(c < 2 or c > total_frames for c in checkpoints):
            raise ValueError(f"checkpoints must lie in [2, {total_frames}]")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((total_frames + 1, dim)) + 1.0
    weights = rng.uniform(0.5, 1.0, size=total_frames + 1)
    frames = [WeightedFrame(f, w) for f, w in zip(features, weights)]

    incremental_rows = []
    batch_rows = []
    state = initialize_state(frames[:2], decay)
    built = 2
    for checkpoint in checkpoints:
        while built < checkpoint:
            state = incremental_update(state, frames[built])
            built += 1
        probe = frames[checkpoint]
        timings = []
        for rep in range(repetitions + 1):
            start = time.perf_counter()
            for _ in range(inner_loops):
                incremental_update(state, probe)
            elapsed = (time.perf_counter() - start) / inner_loops
            if rep > 0:  # first pass is warmup
                timings.append(elapsed)
        incremental_rows.append((checkpoint, float(np.median(timings))))

        timings = []
        for rep in range(repetitions + 1):
            start = time.perf_counter()
            batch_weighted_covariance(frames[:checkpoint], decay)
            elapsed = time.perf_counter() - start
            if rep > 0:
                timings.append(elapsed)
        batch_rows.append((checkpoint, float(np.median(timings))))
    return BenchResult(
        dim=dim,
        decay=decay,
        incremental=tuple(incremental_rows),
        batch=tuple(batch_rows),
    )
