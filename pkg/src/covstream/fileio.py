"""Plain-text and JSON file formats for streams, annotations, models,
manifests, events, and reports.

All floats are written with 17 significant digits so every file round-trips
bit-exactly, and all writers emit fully deterministic bytes for fixed inputs
(no timestamps, no absolute paths).

Stream file::

    skeleton joints=K hip_center=i shoulder_center=j spine=k names=a,b,c,...
    <frame_index> x0 y0 z0 x1 y1 z1 ...

one line per frame, frame_index equal to the 0-based line position. NaN
coordinates are legal; the recognizer drops such frames. An annotation file
lists half-open labeled segments::

    annotation segments=N
    <start> <end> <label>

A model file is versioned JSON holding the recognizer config, the joint
layout, the neutral pose feature, the (n, m) projection, and each class's
projected descriptors packed as upper triangles.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError
from .evaluate import BenchResult, MetricsReport, Segment, StreamAnnotation
from .recognize import (
    ActionModel,
    RecognitionEvent,
    RecognizerConfig,
    RecognizerModel,
)
from .skeleton import JointLayout, SkeletonFrame

MODEL_FORMAT = "covstream-model"
MODEL_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_header(line: str, expected_tag: str, path: Path) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != expected_tag:
        raise FormatError(f"{path}: expected '{expected_tag}' header, got {line!r}")
    fields = {}
    for part in parts[1:]:
        if "=" not in part:
            raise FormatError(f"{path}: malformed header field {part!r}")
        key, value = part.split("=", 1)
        fields[key] = value
    return fields


def write_stream(path: str | Path, frames: Sequence[SkeletonFrame], layout: JointLayout | None = None) -> None:
    path = Path(path)
    if layout is None:
        if not frames:
            raise ValueError("cannot infer a layout from an empty stream")
        layout = frames[0].layout
    lines = [
        "skeleton joints={} hip_center={} shoulder_center={} spine={} names={}".format(
            layout.joint_count,
            layout.hip_center,
            layout.shoulder_center,
            layout.spine,
            ",".join(layout.names),
        )
    ]
    for index, frame in enumerate(frames):
        if frame.layout != layout:
            raise FormatError(f"frame {index} does not share the stream's joint layout")
        coords = " ".join(_fmt(v) for v in frame.joints.ravel())
        lines.append(f"{index} {coords}")
    path.write_text("\n".join(lines) + "\n")


def read_stream(path: str | Path) -> tuple[JointLayout, list[SkeletonFrame]]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read stream file: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise FormatError(f"{path}: empty stream file")
    fields = _parse_header(lines[0], "skeleton", path)
    try:
        joints = int(fields["joints"])
        layout = JointLayout(
            names=tuple(fields["names"].split(",")),
            hip_center=int(fields["hip_center"]),
            shoulder_center=int(fields["shoulder_center"]),
            spine=int(fields["spine"]),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad stream header: {exc}") from exc
    if layout.joint_count != joints:
        raise FormatError(
            f"{path}: header declares {joints} joints but names {layout.joint_count}"
        )
    frames = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 1 + 3 * joints:
            raise FormatError(
                f"{path}:{lineno}: expected {1 + 3 * joints} fields, got {len(parts)}"
            )
        try:
            index = int(parts[0])
            values = np.array([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        if index != len(frames):
            raise FormatError(
                f"{path}:{lineno}: frame index {index} out of order (expected {len(frames)})"
            )
        frames.append(SkeletonFrame(values.reshape(joints, 3), layout))
    return layout, frames


def load_neutral(path: str | Path) -> SkeletonFrame:
    """Read a neutral pose: a stream file with at least one frame."""
    _, frames = read_stream(path)
    if not frames:
        raise FormatError(f"{path}: neutral pose file holds no frames")
    return frames[0]


def write_annotation(path: str | Path, annotation: StreamAnnotation) -> None:
    lines = [f"annotation segments={len(annotation.segments)}"]
    for seg in annotation.segments:
        lines.append(f"{seg.start} {seg.end} {seg.label}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_annotation(path: str | Path) -> StreamAnnotation:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read annotation file: {exc}") from exc
    if not lines:
        raise FormatError(f"{path}: empty annotation file")
    fields = _parse_header(lines[0], "annotation", path)
    segments = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected 'start end label'")
        try:
            segments.append(Segment(int(parts[0]), int(parts[1]), int(parts[2])))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    declared = int(fields.get("segments", len(segments)))
    if declared != len(segments):
        raise FormatError(
            f"{path}: header declares {declared} segments but file holds {len(segments)}"
        )
    try:
        return StreamAnnotation(tuple(segments))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def read_train_manifest(path: str | Path) -> list[tuple[int, Path]]:
    """Lines of '<label> <stream path>'; paths resolve relative to the manifest."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read manifest: {exc}") from exc
    entries = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(maxsplit=1)
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected '<label> <stream path>'")
        try:
            label = int(parts[0])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad label: {exc}") from exc
        entries.append((label, path.parent / parts[1]))
    return entries


def read_eval_manifest(path: str | Path) -> list[tuple[Path, Path]]:
    """Lines of '<stream path> <annotation path>' relative to the manifest."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read manifest: {exc}") from exc
    entries = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected '<stream path> <annotation path>'")
        entries.append((path.parent / parts[0], path.parent / parts[1]))
    return entries


def _pack_symmetric(x: np.ndarray) -> list[float]:
    iu = np.triu_indices(x.shape[0])
    return x[iu].tolist()


def _unpack_symmetric(packed: Sequence[float], dim: int) -> np.ndarray:
    expected = dim * (dim + 1) // 2
    if len(packed) != expected:
        raise FormatError(
            f"packed descriptor has {len(packed)} values, expected {expected} for dim {dim}"
        )
    out = np.zeros((dim, dim))
    out[np.triu_indices(dim)] = packed
    return out + out.T - np.diag(np.diagonal(out))


def save_model(path: str | Path, model: RecognizerModel) -> None:
    config = model.config
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": {
            "decay": config.decay,
            "init_frames": config.init_frames,
            "target_dim": int(model.projection.shape[1]),
            "std_window": config.std_window,
            "epsilon": config.epsilon,
            "use_frame_weights": config.use_frame_weights,
        },
        "layout": {
            "names": list(model.layout.names),
            "hip_center": model.layout.hip_center,
            "shoulder_center": model.layout.shoulder_center,
            "spine": model.layout.spine,
        },
        "neutral": model.neutral_feature.tolist(),
        "projection": model.projection.tolist(),
        "classes": [
            {
                "label": m.label,
                "dim": int(m.descriptors[0].shape[0]),
                "descriptors": [_pack_symmetric(d) for d in m.descriptors],
            }
            for m in model.models
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_model(path: str | Path) -> RecognizerModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise FormatError(f"{path}: cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path}: not a covstream model file")
    if payload.get("version") != MODEL_VERSION:
        raise FormatError(
            f"{path}: unsupported model version {payload.get('version')!r} "
            f"(expected {MODEL_VERSION})"
        )
    try:
        cfg = payload["config"]
        config = RecognizerConfig(
            decay=cfg["decay"],
            init_frames=cfg["init_frames"],
            target_dim=cfg["target_dim"],
            std_window=cfg["std_window"],
            epsilon=cfg["epsilon"],
            use_frame_weights=cfg.get("use_frame_weights", True),
        )
        layout = JointLayout(
            names=tuple(payload["layout"]["names"]),
            hip_center=payload["layout"]["hip_center"],
            shoulder_center=payload["layout"]["shoulder_center"],
            spine=payload["layout"]["spine"],
        )
        models = []
        for entry in payload["classes"]:
            dim = entry["dim"]
            descriptors = tuple(_unpack_symmetric(d, dim) for d in entry["descriptors"])
            models.append(ActionModel(label=int(entry["label"]), descriptors=descriptors))
        model = RecognizerModel(
            models=tuple(models),
            projection=np.array(payload["projection"], dtype=np.float64),
            neutral_feature=np.array(payload["neutral"], dtype=np.float64),
            layout=layout,
            config=config,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed model file: {exc}") from exc
    return model


def write_events(path: str | Path, events: Sequence[RecognitionEvent]) -> None:
    lines = ["# frame label kind min_distance std"]
    for e in events:
        lines.append(f"{e.frame_index} {e.label} {e.kind} {_fmt(e.min_distance)} {_fmt(e.std)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_events(path: str | Path) -> list[tuple[int, int, str, float, float]]:
    path = Path(path)
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FormatError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
        try:
            rows.append((int(parts[0]), int(parts[1]), parts[2], float(parts[3]), float(parts[4])))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return rows


def write_trace(path: str | Path, events: Sequence[RecognitionEvent], labels: Sequence[int]) -> None:
    """Full per-class distance vector for every decided frame."""
    header = "# frame " + " ".join(f"d_{label}" for label in labels)
    lines = [header]
    for e in events:
        lines.append(f"{e.frame_index} " + " ".join(_fmt(v) for v in e.distances))
    Path(path).write_text("\n".join(lines) + "\n")


def _report_value(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt(value)
    return str(value)


def write_report(path: str | Path, report: MetricsReport) -> None:
    """Key-value metrics report; '#' lines are commentary for humans."""
    lines = [
        "# online recognition metrics",
        "# rates are fractions in [0, 1]; latency is fraction of segment length",
        f"segments={report.segment_count}",
        f"detected={report.detected_count}",
        f"miss_rate={_report_value(report.miss_rate)}",
        f"mean_latency={_report_value(report.mean_latency)}",
        f"mean_error_rate={_report_value(report.mean_error_rate)}",
        f"macro_miss_rate={_report_value(report.macro_miss_rate)}",
        f"macro_latency={_report_value(report.macro_latency)}",
        f"macro_error_rate={_report_value(report.macro_error_rate)}",
        f"dropped_frames={report.dropped_frames}",
    ]
    for label in sorted(report.per_class):
        c = report.per_class[label]
        prefix = f"class.{label}"
        lines.append(f"{prefix}.segments={c.segment_count}")
        lines.append(f"{prefix}.detected={c.detected_count}")
        lines.append(f"{prefix}.miss_rate={_report_value(c.miss_rate)}")
        lines.append(f"{prefix}.mean_latency={_report_value(c.mean_latency)}")
        lines.append(f"{prefix}.mean_error_rate={_report_value(c.mean_error_rate)}")
    for key in sorted(report.config):
        lines.append(f"config.{key}={_report_value(report.config[key])}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path: str | Path) -> dict[str, str]:
    """Parse a report back into a raw key -> string mapping."""
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}: malformed report line {line!r}")
        key, value = line.split("=", 1)
        out[key] = value
    return out


def write_bench(path: str | Path, result: BenchResult) -> None:
    lines = [
        f"# covariance update benchmark, dim={result.dim} decay={_fmt(result.decay)}",
        "# incremental update: frames seconds_per_update",
    ]
    for frames, seconds in result.incremental:
        lines.append(f"{frames} {_fmt(seconds)}")
    lines.append("# batch recomputation: frames seconds_per_call")
    for frames, seconds in result.batch:
        lines.append(f"{frames} {_fmt(seconds)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_train_manifest(path: str | Path, entries: Iterable[tuple[int, str]]) -> None:
    lines = [f"{label} {rel}" for label, rel in entries]
    Path(path).write_text("\n".join(lines) + "\n")


def write_eval_manifest(path: str | Path, entries: Iterable[tuple[str, str]]) -> None:
    lines = [f"{stream} {annotation}" for stream, annotation in entries]
    Path(path).write_text("\n".join(lines) + "\n")
