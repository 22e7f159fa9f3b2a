import numpy as np
import pytest

import covstream as cs
from covstream.recognize import BOUNDARY, CONTINUATION, INITIAL_DECISION


def make_world(seed=101, frames_per_instance=40, instances_per_class=4):
    return cs.synth_classes(
        2,
        9,
        frames_per_instance,
        instances_per_class,
        seed=seed,
        separation=3.5,
    )


def split_world(world, holdout=1):
    per_class = {}
    for label, frames in world.instances:
        per_class.setdefault(label, []).append(frames)
    train, test = [], []
    for label, group in per_class.items():
        for frames in group[:-holdout]:
            train.append((label, frames))
        for frames in group[-holdout:]:
            test.append((label, frames))
    return train, test


@pytest.fixture(scope="module")
def trained():
    world = make_world()
    train_instances, test_instances = split_world(world)
    config = cs.RecognizerConfig(decay=0.9, init_frames=20)
    result = cs.train(train_instances, world.neutral, config)
    return world, result, test_instances


def test_config_validation():
    with pytest.raises(ValueError):
        cs.RecognizerConfig(init_frames=1)
    with pytest.raises(ValueError):
        cs.RecognizerConfig(std_window=4)
    with pytest.raises(ValueError):
        cs.RecognizerConfig(decay=1.5)
    with pytest.raises(ValueError):
        cs.RecognizerConfig(epsilon=0.0)


def test_select_label():
    assert cs.select_label((3, 7, 9), np.array([2.0, 1.0, 5.0])) == 7
    # Ties break toward the earliest entry.
    assert cs.select_label((3, 7, 9), np.array([1.0, 1.0, 5.0])) == 3


def test_select_label_order_invariance():
    rng = np.random.default_rng(79)
    labels = (2, 5, 8, 11)
    for _ in range(50):
        distances = rng.uniform(0.1, 4.0, size=4)
        base = cs.select_label(labels, distances)
        rescaled = cs.select_label(labels, 0.3 * distances + 1.0)
        assert base == rescaled


def test_class_distance_takes_minimum():
    rng = np.random.default_rng(83)
    near = cs.random_spd(3, rng)
    far = near + 5.0 * np.eye(3)
    model = cs.ActionModel(label=1, descriptors=(far, near))
    assert cs.class_distance(near, model) == 0.0
    assert cs.class_distance(near, model) < cs.stein_divergence(near, far)


def test_train_builds_expected_model(trained):
    world, result, _ = trained
    model = result.model
    assert model.labels == (1, 2)
    # One projected descriptor per training instance, all m x m.
    m = model.config.target_dim
    assert m == 10
    for class_model in model.models:
        assert len(class_model.descriptors) == 3
        for descriptor in class_model.descriptors:
            assert descriptor.shape == (m, m)
    assert model.projection.shape == (world.layout.feature_dim, m)
    assert result.diagnostics.max_orthonormality_error <= 1e-6
    assert result.skipped_instances == 0


def test_trained_descriptors_separate_classes(trained):
    world, result, test_instances = trained
    model = result.model
    config = model.config
    for true_label, frames in test_instances:
        features = [cs.normalize_skeleton(f) for f in frames]
        weighted = [
            cs.WeightedFrame(f, cs.frame_weight(f, model.neutral_feature))
            for f in features
        ]
        cov, _, _, _ = cs.batch_weighted_covariance(weighted, config.decay)
        descriptor = cs.regularize(
            cs.project(model.projection, cov), config.epsilon
        )
        distances = [cs.class_distance(descriptor, m) for m in model.models]
        assert model.labels[int(np.argmin(distances))] == true_label


def test_train_requires_two_classes():
    world = make_world()
    same_class = [(1, frames) for label, frames in world.instances[:3]]
    with pytest.raises(cs.AffinityUndefinedError):
        cs.train(same_class, world.neutral, cs.RecognizerConfig(init_frames=5))


def test_train_skips_short_instances(trained):
    world, _, _ = trained
    train_instances, _ = split_world(world)
    short = train_instances + [(1, train_instances[0][1][:1])]
    result = cs.train(short, world.neutral, cs.RecognizerConfig(decay=0.9, init_frames=20))
    assert result.skipped_instances == 1
    assert result.model.labels == (1, 2)


def test_single_action_stream_timeline(trained):
    world, result, test_instances = trained
    model = result.model
    true_label, frames = test_instances[0]
    events, state = cs.run_stream(frames, model)
    # First decision fires exactly when the init window fills.
    assert events[0].kind == INITIAL_DECISION
    assert events[0].frame_index == model.config.init_frames - 1
    # Then one continuation per remaining frame and never a boundary.
    assert len(events) == len(frames) - model.config.init_frames + 1
    assert all(e.kind == CONTINUATION for e in events[1:])
    assert state.current_label == true_label
    assert all(e.label == true_label for e in events)


def test_invalid_frames_are_dropped(trained):
    world, result, test_instances = trained
    model = result.model
    _, frames = test_instances[0]
    bad = cs.SkeletonFrame(np.full((world.layout.joint_count, 3), np.nan), world.layout)
    events, state = cs.run_stream([bad, bad, bad, *frames], model)
    assert state.dropped_frames == 3
    assert events[0].frame_index == model.config.init_frames - 1 + 3


def test_two_action_stream_has_boundary(trained):
    world, result, test_instances = trained
    model = result.model
    (label_a, frames_a), (label_b, frames_b) = test_instances[:2]
    assert label_a != label_b
    events, state = cs.run_stream(list(frames_a) + list(frames_b), model)
    boundaries = [e for e in events if e.kind == BOUNDARY]
    assert boundaries, "expected at least one boundary event"
    assert boundaries[0].frame_index >= len(frames_a)
    assert state.current_label == label_b
    assert events[-1].label == label_b


def test_boundary_reset_restarts_initialization():
    world = make_world(seed=202, frames_per_instance=60)
    train_instances, test_instances = split_world(world)
    config = cs.RecognizerConfig(decay=0.9, init_frames=20, reset_on_boundary=True)
    result = cs.train(train_instances, world.neutral, config)
    (label_a, frames_a), (label_b, frames_b) = test_instances[:2]
    events, state = cs.run_stream(list(frames_a) + list(frames_b), result.model)
    kinds = [e.kind for e in events]
    assert BOUNDARY in kinds
    first_boundary = kinds.index(BOUNDARY)
    # After the reset the recognizer re-buffers and decides afresh.
    assert INITIAL_DECISION in kinds[first_boundary + 1 :]
    assert state.current_label == label_b


def test_short_stream_produces_no_events(trained):
    world, result, test_instances = trained
    model = result.model
    _, frames = test_instances[0]
    events, state = cs.run_stream(frames[: model.config.init_frames - 1], model)
    assert events == []
    assert state.cov_state is None


def test_online_wrapper_matches_run_stream(trained):
    world, result, test_instances = trained
    model = result.model
    _, frames = test_instances[0]
    expected, _ = cs.run_stream(frames, model)
    recognizer = cs.OnlineRecognizer(model)
    got = [event for frame in frames if (event := recognizer.step(frame)) is not None]
    assert [e.frame_index for e in got] == [e.frame_index for e in expected]
    assert [e.label for e in got] == [e.label for e in expected]
