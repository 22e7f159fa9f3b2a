"""Command line interface.

Subcommands: train, recognize, evaluate, bench, synth. Exit codes: 0 on
success, 1 for usage errors, 2 for data errors (missing or malformed files,
inconsistent inputs), 3 for numerical faults.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio
from .errors import DataError, FormatError, NumericalError
from .evaluate import bench_update, evaluate_streams, stitch, synth_classes
from .recognize import RecognizerConfig, run_stream, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; here usage errors are 1."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="covstream",
        description="Streaming weighted covariance descriptors and online "
        "skeleton action recognition.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser(
        "train", help="train a recognition model from labeled streams"
    )
    p.add_argument("--data", required=True, help="manifest of '<label> <stream path>' lines")
    p.add_argument("--neutral", required=True, help="neutral pose stream file (first frame used)")
    p.add_argument("--dim", type=int, default=None, help="projected descriptor size m")
    p.add_argument("--eta", type=float, default=0.95, help="temporal decay factor")
    p.add_argument("--init-frames", type=int, default=30, help="initialization window length")
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser(
        "recognize", help="run online recognition over one stream"
    )
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("--stream", required=True, help="skeleton stream file")
    p.add_argument("--out", required=True, help="output events file")
    p.add_argument("--trace", default=None, help="optional per-frame distance trace file")
    p.add_argument(
        "--reset-on-boundary",
        action="store_true",
        help="re-initialize the running state at every detected boundary",
    )
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser(
        "evaluate", help="score annotated streams against a model"
    )
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument(
        "--streams", required=True, help="manifest of '<stream path> <annotation path>' lines"
    )
    p.add_argument("--out", required=True, help="output metrics report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "bench", help="time incremental vs batch descriptor updates"
    )
    p.add_argument("--d", type=int, required=True, help="feature dimension")
    p.add_argument("--frames", type=int, required=True, help="total stream length")
    p.add_argument("--out", required=True, help="output timing table")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser(
        "synth", help="generate a synthetic training and test world"
    )
    p.add_argument("--classes", type=int, required=True, help="number of action classes")
    p.add_argument(
        "--dim", type=int, required=True, help="action feature dimension (multiple of 3)"
    )
    p.add_argument("--instances", type=int, required=True, help="training instances per class")
    p.add_argument("--frames", type=int, required=True, help="frames per instance")
    p.add_argument("--seed", type=int, required=True, help="generator seed")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument(
        "--test-instances", type=int, default=3, help="held-out instances per class (default 3)"
    )
    p.add_argument(
        "--test-streams", type=int, default=3, help="stitched test streams to emit (default 3)"
    )
    p.add_argument(
        "--test-segments", type=int, default=10, help="segments per test stream (default 10)"
    )
    p.add_argument(
        "--separation",
        type=float,
        default=2.0,
        help="minimum pairwise divergence between class generators (default 2.0)",
    )
    p.set_defaults(func=cmd_synth)
    return parser


def cmd_train(args) -> int:
    entries = fileio.read_train_manifest(args.data)
    if not entries:
        raise DataError("no streams: the training manifest is empty")
    neutral = fileio.load_neutral(args.neutral)
    instances = []
    for label, stream_path in entries:
        _, frames = fileio.read_stream(stream_path)
        instances.append((label, frames))
    config = RecognizerConfig(
        decay=args.eta, init_frames=args.init_frames, target_dim=args.dim
    )
    result = train(instances, neutral, config)
    model = result.model
    for m in model.models:
        print(f"class {m.label}: {len(m.descriptors)} descriptors")
    if result.skipped_instances:
        print(f"skipped {result.skipped_instances} instances with too few usable frames")
    history = result.diagnostics.objective_history
    print(
        f"projection {model.projection.shape[0]}x{model.projection.shape[1]}: "
        f"objective {history[0]:.6g} -> {history[-1]:.6g} "
        f"in {result.diagnostics.iterations} steps "
        f"({'converged' if result.diagnostics.converged else 'iteration cap hit'})"
    )
    print(f"orthonormality error {result.diagnostics.max_orthonormality_error:.3g}")
    fileio.save_model(args.out, model)
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_recognize(args) -> int:
    model = fileio.load_model(args.model)
    if args.reset_on_boundary:
        model = replace(model, config=replace(model.config, reset_on_boundary=True))
    layout, frames = fileio.read_stream(args.stream)
    if layout != model.layout:
        raise FormatError("stream joint layout does not match the model's layout")
    events, state = run_stream(frames, model)
    fileio.write_events(args.out, events)
    if args.trace is not None:
        fileio.write_trace(args.trace, events, model.labels)
    if not events:
        print(
            f"warning: no decisions ({len(frames)} frames, initialization "
            f"window {model.config.init_frames})",
            file=sys.stderr,
        )
    boundaries = sum(1 for e in events if e.kind == "boundary")
    print(
        f"{len(events)} events ({boundaries} boundaries), "
        f"{state.dropped_frames} dropped frames"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = fileio.load_model(args.model)
    pairs = fileio.read_eval_manifest(args.streams)
    if not pairs:
        raise DataError("no streams: the evaluation manifest is empty")
    streams = []
    for stream_path, annotation_path in pairs:
        layout, frames = fileio.read_stream(stream_path)
        if layout != model.layout:
            raise FormatError(
                f"{stream_path}: joint layout does not match the model's layout"
            )
        streams.append((frames, fileio.read_annotation(annotation_path)))
    config_echo = {
        "decay": model.config.decay,
        "init_frames": model.config.init_frames,
        "target_dim": model.config.target_dim,
        "epsilon": model.config.epsilon,
        "std_window": model.config.std_window,
        "use_frame_weights": model.config.use_frame_weights,
        "reset_on_boundary": model.config.reset_on_boundary,
    }
    report = evaluate_streams(model, streams, config=config_echo)
    fileio.write_report(args.out, report)
    print(
        f"{report.segment_count} segments over {len(streams)} streams: "
        f"miss {report.miss_rate:.3f}, "
        f"latency {np.nan if report.mean_latency is None else report.mean_latency:.3f}, "
        f"error {np.nan if report.mean_error_rate is None else report.mean_error_rate:.3f}"
    )
    print(f"report written to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    result = bench_update(args.d, args.frames)
    fileio.write_bench(args.out, result)
    first = result.incremental[0]
    last = result.incremental[-1]
    print(
        f"incremental: {first[1] * 1e6:.2f} us at {first[0]} frames, "
        f"{last[1] * 1e6:.2f} us at {last[0]} frames"
    )
    if len(result.batch) >= 2:
        b_first, b_last = result.batch[0], result.batch[-1]
        print(
            f"batch: {b_first[1] * 1e3:.3f} ms at {b_first[0]} frames, "
            f"{b_last[1] * 1e3:.3f} ms at {b_last[0]} frames"
        )
    print(f"timing table written to {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    synth = synth_classes(
        n_classes=args.classes,
        feature_dim=args.dim,
        frames_per_instance=args.frames,
        instances_per_class=args.instances + args.test_instances,
        seed=args.seed,
        separation=args.separation,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "train").mkdir(exist_ok=True)
    (out_dir / "test").mkdir(exist_ok=True)

    fileio.write_stream(out_dir / "neutral.txt", [synth.neutral])

    by_label: dict[int, list] = {}
    for label, frames in synth.instances:
        by_label.setdefault(label, []).append(frames)
    train_entries = []
    test_pool = []
    for label in sorted(by_label):
        group = by_label[label]
        for k, frames in enumerate(group[: args.instances]):
            rel = f"train/class{label}_inst{k:02d}.txt"
            fileio.write_stream(out_dir / rel, list(frames))
            train_entries.append((label, rel))
        for frames in group[args.instances:]:
            test_pool.append((label, frames))
    fileio.write_train_manifest(out_dir / "train_manifest.txt", train_entries)

    eval_entries = []
    stream_count = args.test_streams if test_pool and args.test_segments > 0 else 0
    for s in range(stream_count):
        rng = np.random.default_rng(args.seed + 1000 + s)
        chosen = [test_pool[int(i)] for i in rng.integers(0, len(test_pool), size=args.test_segments)]
        frames, annotation = stitch(chosen, seed=args.seed + 2000 + s)
        stream_rel = f"test/stream{s:02d}.txt"
        ann_rel = f"test/stream{s:02d}.ann"
        fileio.write_stream(out_dir / stream_rel, frames)
        fileio.write_annotation(out_dir / ann_rel, annotation)
        eval_entries.append((stream_rel, ann_rel))
    fileio.write_eval_manifest(out_dir / "test_manifest.txt", eval_entries)

    print(
        f"{args.classes} classes, {args.instances} train + {args.test_instances} test "
        f"instances each, {args.test_streams} stitched test streams "
        f"({args.test_segments} segments)"
    )
    print(f"world written under {out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except DataError as exc:
        print(f"covstream: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"covstream: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
