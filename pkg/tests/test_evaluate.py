import numpy as np
import pytest

import covstream as cs
from covstream.recognize import CONTINUATION, INITIAL_DECISION
from oracles import brute_force_scores


def event(frame, label):
    return cs.RecognitionEvent(
        frame_index=frame,
        label=label,
        kind=INITIAL_DECISION if frame == 0 else CONTINUATION,
        min_distance=0.0,
        std=0.0,
        distances=np.zeros(2),
    )


def annotation(*segments):
    return cs.StreamAnnotation(tuple(cs.Segment(*s) for s in segments))


def test_segment_validation():
    with pytest.raises(ValueError):
        cs.Segment(10, 10, 1)
    with pytest.raises(ValueError):
        cs.Segment(-1, 5, 1)
    with pytest.raises(ValueError):
        annotation((0, 10, 1), (12, 20, 2))  # gap
    with pytest.raises(ValueError):
        annotation((0, 10, 1), (5, 20, 2))  # overlap


def test_annotation_properties():
    ann = annotation((0, 30, 1), (30, 50, 2))
    assert ann.frame_count == 50
    assert ann.classes == (1, 2)


def test_score_latency_and_leading_error():
    # Nothing labeled until frame 10, then correct: latency and error 0.25.
    scores = cs.score_stream([event(10, 1)], annotation((0, 40, 1)))
    assert scores[0].detected
    assert scores[0].latency == pytest.approx(0.25)
    assert scores[0].error_rate == pytest.approx(0.25)


def test_score_wrong_then_right():
    scores = cs.score_stream(
        [event(10, 2), event(14, 1)], annotation((0, 40, 1))
    )
    assert scores[0].latency == pytest.approx(14 / 40)
    assert scores[0].error_rate == pytest.approx(14 / 40)


def test_score_two_segments():
    scores = cs.score_stream(
        [event(5, 1), event(33, 2)], annotation((0, 30, 1), (30, 50, 2))
    )
    assert scores[0].latency == pytest.approx(5 / 30)
    assert scores[0].error_rate == pytest.approx(5 / 30)
    assert scores[1].latency == pytest.approx(3 / 20)
    assert scores[1].error_rate == pytest.approx(3 / 20)


def test_label_in_effect_counts_at_segment_start():
    # The second segment repeats the class; the carried label detects it
    # instantly with zero latency and zero error.
    scores = cs.score_stream(
        [event(4, 1)], annotation((0, 30, 1), (30, 50, 1))
    )
    assert scores[1].detected
    assert scores[1].latency == 0.0
    assert scores[1].error_rate == 0.0


def test_stale_label_counts_as_error():
    # One correct decision at 0, never updated: the second segment is missed
    # entirely and the first is perfect.
    scores = cs.score_stream(
        [event(0, 1)], annotation((0, 30, 1), (30, 50, 2))
    )
    assert scores[0].latency == 0.0 and scores[0].error_rate == 0.0
    assert not scores[1].detected
    assert scores[1].latency is None


def test_score_rejects_bad_events():
    with pytest.raises(ValueError):
        cs.score_stream([event(5, 1), event(5, 1)], annotation((0, 10, 1)))
    with pytest.raises(ValueError):
        cs.score_stream([event(12, 1)], annotation((0, 10, 1)))


def test_score_matches_brute_force_oracle():
    rng = np.random.default_rng(89)
    for trial in range(50):
        n_segments = int(rng.integers(1, 6))
        lengths = rng.integers(5, 40, size=n_segments)
        start, segs = 0, []
        for length in lengths:
            segs.append((start, start + int(length), int(rng.integers(1, 4))))
            start += int(length)
        ann = annotation(*segs)
        frames = np.sort(
            rng.choice(ann.frame_count, size=int(rng.integers(0, 12)), replace=False)
        )
        events = [event(int(f), int(rng.integers(1, 4))) for f in frames]
        got = cs.score_stream(events, ann)
        expected = brute_force_scores(events, ann)
        for score, (detected, latency, error_rate) in zip(got, expected):
            assert score.detected == detected
            assert score.latency == latency
            assert score.error_rate == error_rate


def test_aggregate_hand_values():
    seg_a1 = cs.SegmentScore(cs.Segment(0, 10, 1), True, 0.2, 0.3)
    seg_a2 = cs.SegmentScore(cs.Segment(10, 20, 1), False, None, None)
    seg_b = cs.SegmentScore(cs.Segment(20, 30, 2), True, 0.1, 0.0)
    report = cs.aggregate_scores([[seg_a1, seg_a2], [seg_b]], dropped_frames=4)
    assert report.segment_count == 3
    assert report.detected_count == 2
    assert report.miss_rate == pytest.approx(1 / 3)
    assert report.mean_latency == pytest.approx(0.15)
    assert report.mean_error_rate == pytest.approx(0.15)
    assert report.macro_miss_rate == pytest.approx(0.25)
    assert report.macro_latency == pytest.approx(0.15)
    assert report.per_class[1].miss_rate == pytest.approx(0.5)
    assert report.per_class[2].mean_error_rate == 0.0
    assert report.dropped_frames == 4


def test_aggregate_requires_scores():
    with pytest.raises(cs.DataError):
        cs.aggregate_scores([])


def test_stitch_is_a_seeded_permutation():
    world = cs.synth_classes(2, 9, 15, 2, seed=303, separation=1.0)
    frames, ann = cs.stitch(world.instances, seed=5)
    again, ann_again = cs.stitch(world.instances, seed=5)
    assert ann == ann_again
    assert [f.joints.tobytes() for f in frames] == [f.joints.tobytes() for f in again]
    # Segments tile the stream and each one reproduces its source instance.
    assert ann.frame_count == sum(len(inst) for _, inst in world.instances)
    by_label = {}
    for label, inst in world.instances:
        by_label.setdefault(label, []).append(inst)
    for seg in ann.segments:
        chunk = frames[seg.start : seg.end]
        assert any(
            len(inst) == len(chunk)
            and all(np.array_equal(a.joints, b.joints) for a, b in zip(inst, chunk))
            for inst in by_label[seg.label]
        )


def test_evaluate_streams_checks_lengths():
    world = cs.synth_classes(2, 9, 25, 3, seed=404, separation=3.0)
    train, test = world.instances[:4], world.instances[4:]
    result = cs.train(train, world.neutral, cs.RecognizerConfig(decay=0.9, init_frames=10))
    frames, ann = cs.stitch(test, seed=1)
    with pytest.raises(cs.DimensionMismatchError):
        cs.evaluate_streams(result.model, [(frames[:-1], ann)])
    with pytest.raises(cs.DataError):
        cs.evaluate_streams(result.model, [])


def test_synth_is_deterministic():
    a = cs.synth_classes(2, 9, 10, 2, seed=42)
    b = cs.synth_classes(2, 9, 10, 2, seed=42)
    assert len(a.instances) == len(b.instances) == 4
    for (la, fa), (lb, fb) in zip(a.instances, b.instances):
        assert la == lb
        assert all(np.array_equal(x.joints, y.joints) for x, y in zip(fa, fb))
    c = cs.synth_classes(2, 9, 10, 2, seed=43)
    assert not np.array_equal(a.instances[0][1][0].joints, c.instances[0][1][0].joints)


def test_synth_world_shape():
    world = cs.synth_classes(3, 9, 12, 2, seed=7)
    assert world.layout.joint_count == 6
    assert sorted({label for label, _ in world.instances}) == [1, 2, 3]
    for label, frames in world.instances:
        assert len(frames) == 12
        assert all(f.joints.shape == (6, 3) for f in frames)
        assert all(f.is_valid for f in frames)
    assert world.neutral.is_valid
    # Class covariance targets honor the requested separation.
    pairwise = cs.stein_pairwise(list(world.class_covs))
    off_diagonal = pairwise[np.triu_indices(3, k=1)]
    assert off_diagonal.min() >= 2.0


def test_synth_gives_up_when_inseparable():
    with pytest.raises(cs.InseparableSynthesisError):
        cs.synth_classes(3, 9, 10, 2, seed=0, separation=1e9, max_retries=2)


def test_bench_smoke():
    result = cs.bench_update(
        5, 300, checkpoints=(100, 300), repetitions=2, inner_loops=5, seed=1
    )
    assert [t for t, _ in result.incremental] == [100, 300]
    assert [t for t, _ in result.batch] == [100, 300]
    assert all(seconds > 0.0 for _, seconds in result.incremental)
    assert all(seconds > 0.0 for _, seconds in result.batch)
    assert result.dim == 5
    with pytest.raises(ValueError):
        cs.bench_update(5, 100, checkpoints=(500,))
