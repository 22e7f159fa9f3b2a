import numpy as np
import pytest

import covstream as cs
from covstream import fileio


@pytest.fixture(scope="module")
def world():
    return cs.synth_classes(2, 9, 25, 3, seed=505, separation=3.0)


@pytest.fixture(scope="module")
def trained(world):
    config = cs.RecognizerConfig(decay=0.9, init_frames=10)
    return cs.train(world.instances[:4], world.neutral, config)


def test_stream_round_trip(tmp_path, world):
    label, frames = world.instances[0]
    path = tmp_path / "stream.txt"
    fileio.write_stream(path, frames)
    layout, loaded = fileio.read_stream(path)
    assert layout == world.layout
    assert len(loaded) == len(frames)
    for a, b in zip(frames, loaded):
        assert np.array_equal(a.joints, b.joints)


def test_load_neutral(tmp_path, world):
    path = tmp_path / "neutral.txt"
    fileio.write_stream(path, [world.neutral])
    loaded = fileio.load_neutral(path)
    assert np.array_equal(loaded.joints, world.neutral.joints)


def test_annotation_round_trip(tmp_path):
    ann = cs.StreamAnnotation(
        (cs.Segment(0, 30, 1), cs.Segment(30, 45, 2), cs.Segment(45, 90, 1))
    )
    path = tmp_path / "stream.ann"
    fileio.write_annotation(path, ann)
    assert fileio.read_annotation(path) == ann


def test_model_round_trip_is_exact(tmp_path, world, trained):
    path = tmp_path / "model.json"
    fileio.save_model(path, trained.model)
    loaded = fileio.load_model(path)
    assert loaded.labels == trained.model.labels
    assert np.array_equal(loaded.projection, trained.model.projection)
    assert np.array_equal(loaded.neutral_feature, trained.model.neutral_feature)
    assert loaded.layout == trained.model.layout
    for got, ref in zip(loaded.models, trained.model.models):
        assert got.label == ref.label
        assert len(got.descriptors) == len(ref.descriptors)
        for a, b in zip(got.descriptors, ref.descriptors):
            assert np.array_equal(a, b)
    config, ref_config = loaded.config, trained.model.config
    assert config.decay == ref_config.decay
    assert config.init_frames == ref_config.init_frames
    assert config.target_dim == ref_config.target_dim
    assert config.std_window == ref_config.std_window
    assert config.epsilon == ref_config.epsilon
    assert config.use_frame_weights == ref_config.use_frame_weights
    # Saving the loaded model reproduces the file byte for byte.
    again = tmp_path / "model2.json"
    fileio.save_model(again, loaded)
    assert again.read_bytes() == path.read_bytes()


def test_manifest_round_trips(tmp_path):
    train_path = tmp_path / "train_manifest.txt"
    fileio.write_train_manifest(train_path, [(1, "a/x.txt"), (2, "b/y.txt")])
    entries = fileio.read_train_manifest(train_path)
    assert entries == [(1, tmp_path / "a/x.txt"), (2, tmp_path / "b/y.txt")]

    eval_path = tmp_path / "eval_manifest.txt"
    fileio.write_eval_manifest(eval_path, [("s1.txt", "s1.ann")])
    pairs = fileio.read_eval_manifest(eval_path)
    assert pairs == [(tmp_path / "s1.txt", tmp_path / "s1.ann")]


def test_events_round_trip(tmp_path):
    events = [
        cs.RecognitionEvent(9, 2, "initial_decision", 0.5, 0.25, np.array([0.5, 1.0])),
        cs.RecognitionEvent(10, 2, "continuation", 0.4, 0.2, np.array([0.4, 1.1])),
    ]
    path = tmp_path / "events.txt"
    fileio.write_events(path, events)
    rows = fileio.read_events(path)
    assert rows == [(9, 2, "initial_decision", 0.5, 0.25), (10, 2, "continuation", 0.4, 0.2)]


def test_trace_file_lists_distances(tmp_path):
    events = [
        cs.RecognitionEvent(9, 2, "initial_decision", 0.5, 0.25, np.array([0.5, 1.0])),
    ]
    path = tmp_path / "trace.txt"
    fileio.write_trace(path, events, labels=[1, 2])
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("#")
    assert lines[1].split() == ["9", "0.5", "1"]


def test_report_round_trip(tmp_path):
    report = cs.aggregate_scores(
        [[cs.SegmentScore(cs.Segment(0, 10, 1), True, 0.2, 0.1)],
         [cs.SegmentScore(cs.Segment(0, 20, 2), False, None, None)]],
        dropped_frames=2,
        config={"decay": 0.9, "reset_on_boundary": False},
    )
    path = tmp_path / "report.txt"
    fileio.write_report(path, report)
    values = fileio.read_report(path)
    assert values["segments"] == "2"
    assert float(values["miss_rate"]) == 0.5
    assert float(values["mean_latency"]) == 0.2
    assert values["dropped_frames"] == "2"
    assert float(values["config.decay"]) == 0.9
    assert values["config.reset_on_boundary"] == "false"
    # Missed-only classes serialize their undefined means as nan.
    assert values["class.2.mean_latency"] == "nan"


def test_stream_format_errors(tmp_path):
    bad_header = tmp_path / "bad1.txt"
    bad_header.write_text("not a header\n")
    with pytest.raises(cs.FormatError):
        fileio.read_stream(bad_header)

    missing_field = tmp_path / "bad2.txt"
    missing_field.write_text(
        "skeleton joints=4 hip_center=0 shoulder_center=1 spine=2 names=a,b,c,d\n"
        "0 1.0 2.0\n"
    )
    with pytest.raises(cs.FormatError) as err:
        fileio.read_stream(missing_field)
    assert "bad2.txt" in str(err.value)

    wrong_index = tmp_path / "bad3.txt"
    row = " ".join(["0.0"] * 12)
    wrong_index.write_text(
        "skeleton joints=4 hip_center=0 shoulder_center=1 spine=2 names=a,b,c,d\n"
        f"5 {row}\n"
    )
    with pytest.raises(cs.FormatError):
        fileio.read_stream(wrong_index)


def test_annotation_format_errors(tmp_path):
    path = tmp_path / "bad.ann"
    path.write_text("annotation segments=2\n0 30 1\n")
    with pytest.raises(cs.FormatError):
        fileio.read_annotation(path)


def test_model_format_errors(tmp_path, trained):
    path = tmp_path / "model.json"
    fileio.save_model(path, trained.model)
    import json

    payload = json.loads(path.read_text())
    del payload["projection"]
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(payload))
    with pytest.raises(cs.FormatError):
        fileio.load_model(broken)

    not_json = tmp_path / "not.json"
    not_json.write_text("{")
    with pytest.raises(cs.FormatError):
        fileio.load_model(not_json)

    wrong_format = tmp_path / "wrong.json"
    payload = json.loads(path.read_text())
    payload["format"] = "something-else"
    wrong_format.write_text(json.dumps(payload))
    with pytest.raises(cs.FormatError):
        fileio.load_model(wrong_format)
