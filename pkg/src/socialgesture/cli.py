"""Command-line entry point: ``socialgesture <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence, TextIO

from .classifier import BundleFormatError, ModelBundle, TrainConfig, TrainingError, load_bundle, save_bundle, train_bundle
from .detector import Detector, DetectorConfig, detect_clip
from .dyad import FusionConfig, NetParams, simulate_dyad
from .evaluation import PilotConfig, report, run_pilot
from .features import DegenerateBodyError, WindowConfig, clip_window_features, format_feature_csv
from .protocol import ProtocolError
from .skeleton import (
    COHORTS,
    ClipFormatError,
    GestureLabel,
    SynthParams,
    parse_clip,
    serialize_clip,
    synth_clip,
    synth_cohort,
    synth_hug_clip,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to exit 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.format_usage().rstrip()}\n{self.prog}: error: {message}")

    def exit(self, status: int = 0, message: str | None = None) -> None:  # type: ignore[override]
        if message:
            raise UsageError(message.rstrip())
        raise _Exit(status)


class _Exit(Exception):
    def __init__(self, status: int) -> None:
        self.status = status


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**63:
        raise argparse.ArgumentTypeError(f"seed out of range: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="socialgesture", description="Gesture recognition for mediated social touch.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="{gen,train,detect,eval,dyad,inspect}", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="synthesize skeleton clips")
    what = g.add_mutually_exclusive_group(required=True)
    what.add_argument("--gesture", help="atomic gesture label, HUG, or none")
    what.add_argument("--cohort", choices=sorted(COHORTS), help="named training cohort")
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--noise", type=_nonneg_float, default=None, help="joint noise sigma in metres")
    g.add_argument("--participant-seed", type=_seed, default=0)
    g.add_argument("--offset-frames", type=int, default=0, help="LS delay for HUG clips")
    g.add_argument("--out", help="output file (single clip) or directory (cohort); default stdout")

    t = sub.add_parser("train", help="train a model bundle from a clip directory")
    t.add_argument("--corpus", required=True, help="directory of .jsonl clips")
    t.add_argument("--rounds", type=_positive_int, default=50)
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--window", type=_positive_int, default=15)
    t.add_argument("--stride", type=_positive_int, default=1)
    t.add_argument("--out", help="bundle path; default stdout")

    d = sub.add_parser("detect", help="run the detector over a clip")
    d.add_argument("--model", required=True)
    d.add_argument("--clip", required=True, help="clip path, or - for stdin")
    d.add_argument("--format", choices=("events", "csv", "conf"), default="events")

    e = sub.add_parser("eval", help="evaluation harnesses")
    esub = e.add_subparsers(dest="harness", metavar="{pilot}", parser_class=_Parser)
    esub.required = True
    ep = esub.add_parser("pilot", help="synthetic pilot study")
    ep.add_argument("--model", required=True)
    ep.add_argument("--seed", type=_seed, default=0)
    ep.add_argument("--participants", type=_positive_int, default=17)
    ep.add_argument("--noise", type=_nonneg_float, default=None)
    ep.add_argument("--mat-prompts", type=int, default=3, help="RM and LM prompts each per participant; 0 skips")
    ep.add_argument("--report", help="report path (.csv selects csv); default stdout")
    ep.add_argument("--format", choices=("text", "csv"), default=None)

    y = sub.add_parser("dyad", help="simulate a two-peer session")
    y.add_argument("--model", required=True)
    y.add_argument("--peer-a", required=True)
    y.add_argument("--peer-b", required=True)
    y.add_argument("--latency-ms", type=_nonneg_float, default=80.0)
    y.add_argument("--jitter-ms", type=_nonneg_float, default=20.0)
    y.add_argument("--drop", type=_nonneg_float, default=0.0)
    y.add_argument("--seed", type=_seed, default=0)
    y.add_argument("--hold-hands", action="store_true", help="enable the dyadic HOLD_HANDS gesture")
    y.add_argument("--trace", help="write the delivery trace (JSON lines) here")

    i = sub.add_parser("inspect", help="summarize a model bundle")
    i.add_argument("--model", required=True)
    return p


def _read_bytes(path: str, stdin: TextIO) -> bytes:
    if path == "-":
        buf = getattr(stdin, "buffer", None)
        return buf.read() if buf is not None else stdin.read().encode("utf-8")
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, data: bytes, stdout: TextIO) -> None:
    if path is None or path == "-":
        stdout.write(data.decode("utf-8"))
        return
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None


def _load_model(path: str, stdin: TextIO) -> ModelBundle:
    return load_bundle(_read_bytes(path, stdin))


def _load_clip(path: str, stdin: TextIO):
    try:
        return parse_clip(_read_bytes(path, stdin))
    except ClipFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


def _require_window(clip, path: str, bundle: ModelBundle) -> None:
    W = bundle.window.window
    if len(clip) < W:
        raise DataError(f"{path}: clip has {len(clip)} frames, fewer than the {W}-frame window")


def _cmd_gen(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> None:
    params = SynthParams(participant_seed=args.participant_seed)
    if args.noise is not None:
        params = replace(params, noise_sigma=args.noise)
    if args.cohort:
        if not args.out:
            raise UsageError("gen --cohort requires --out DIR")
        spec = replace(COHORTS[args.cohort], params=params)
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise DataError(f"cannot create {out}: {exc.strerror}") from None
        for stem, clip in synth_cohort(spec, args.seed):
            _write(str(out / f"{stem}.jsonl"), serialize_clip(clip), stdout)
        return
    try:
        label = GestureLabel.parse(args.gesture)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if label is GestureLabel.HUG:
        clip = synth_hug_clip(params, args.seed, args.offset_frames)
    elif label is GestureLabel.HOLD_HANDS:
        raise UsageError("HOLD_HANDS is a two-person gesture; generate RM/LM clips per peer")
    else:
        clip = synth_clip(label, params, args.seed)
    _write(args.out, serialize_clip(clip), stdout)


def _cmd_train(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> None:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise DataError(f"corpus directory not found: {corpus}")
    paths = sorted(corpus.glob("*.jsonl"))
    if not paths:
        raise DataError(f"no .jsonl clips in {corpus}")
    clips = [_load_clip(str(p), stdin) for p in paths]
    bundle = train_bundle(clips, WindowConfig(args.window, args.stride), TrainConfig(rounds=args.rounds, seed=args.seed))
    _write(args.out, save_bundle(bundle), stdout)


def _cmd_detect(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> None:
    bundle = _load_model(args.model, stdin)
    clip = _load_clip(args.clip, stdin)
    _require_window(clip, args.clip, bundle)
    config = DetectorConfig(window=bundle.window)
    if args.format == "events":
        for ev in detect_clip(clip, bundle, config).events:
            stdout.write(ev.format() + "\n")
    elif args.format == "csv":
        ends, X = clip_window_features(clip, config.window)
        stdout.write(format_feature_csv(ends, X))
    else:
        # live-preview stand-in: one line per scored window as the stream advances
        names = [g.name for g in GestureLabel if g.is_atomic]
        stdout.write(",".join(["frame", *names]) + "\n")
        det = Detector(bundle, config, clip.fps)
        for i in range(len(clip)):
            step = det.step(clip.frame(i))
            if i >= config.window.window - 1 and (i - config.window.window + 1) % config.window.stride == 0:
                stdout.write(",".join([str(i), *(f"{c:.6f}" for c in step.confidences)]) + "\n")


def _cmd_eval(args: argparse.Namespace, stdin: TextIO, stdout: TextIO, stderr: TextIO) -> None:
    bundle = _load_model(args.model, stdin)
    synth = SynthParams() if args.noise is None else SynthParams(noise_sigma=args.noise)
    if args.mat_prompts < 0:
        raise UsageError("--mat-prompts must be >= 0")
    config = PilotConfig(
        participants=args.participants,
        seed=args.seed,
        synth=synth,
        detector=DetectorConfig(window=bundle.window),
        mat_prompts_each=args.mat_prompts,
    )
    fmt = args.format or ("csv" if args.report and args.report.lower().endswith(".csv") else "text")
    result = run_pilot(bundle, config)
    _write(args.report, report(result, fmt), stdout)
    stderr.write(f"overall accuracy {result.overall_accuracy:.4f} over {result.matrix.total} prompts\n")


def _cmd_dyad(args: argparse.Namespace, stdin: TextIO, stdout: TextIO, stderr: TextIO) -> None:
    if args.drop > 1:
        raise UsageError("--drop must be in [0, 1]")
    bundle = _load_model(args.model, stdin)
    clip_a = _load_clip(args.peer_a, stdin)
    clip_b = _load_clip(args.peer_b, stdin)
    _require_window(clip_a, args.peer_a, bundle)
    _require_window(clip_b, args.peer_b, bundle)
    net = NetParams(args.latency_ms / 1000.0, args.jitter_ms / 1000.0, args.drop, args.seed)
    fusion = FusionConfig(hold_hands=args.hold_hands)
    result = simulate_dyad(clip_a, clip_b, bundle, DetectorConfig(window=bundle.window), fusion, net)
    stdout.write("peer,gesture,t,score\n" + result.format_log())
    if args.trace:
        _write(args.trace, result.format_trace().encode("utf-8"), stdout)
    dropped = result.dropped
    stderr.write(f"messages {len(result.trace)}, dropped {dropped}, stale " +
                 ", ".join(f"{p}={n}" for p, n in sorted(result.stale.items())) + "\n")


def _cmd_inspect(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> None:
    bundle = _load_model(args.model, stdin)
    stdout.write(f"feature_spec_version {bundle.feature_spec_version}\n")
    for key in sorted(bundle.train_meta):
        stdout.write(f"meta {key} {bundle.train_meta[key]}\n")
    stdout.write("gesture,stumps,alpha_sum,rounds\n")
    for m in bundle.models:
        stdout.write(f"{m.gesture.name},{len(m.stumps)},{m.alpha_sum:.6f},{m.trained_rounds}\n")


def run_cli(
    argv: Sequence[str] | None = None,
    stdin: TextIO | None = None,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except _Exit as exc:  # --help
        return exc.status
    if args.verbose:
        handler = logging.StreamHandler(stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root = logging.getLogger("socialgesture")
        root.addHandler(handler)
        root.setLevel(logging.INFO)
    try:
        if args.command == "gen":
            _cmd_gen(args, stdin, stdout)
        elif args.command == "train":
            _cmd_train(args, stdin, stdout)
        elif args.command == "detect":
            _cmd_detect(args, stdin, stdout)
        elif args.command == "eval":
            _cmd_eval(args, stdin, stdout, stderr)
        elif args.command == "dyad":
            _cmd_dyad(args, stdin, stdout, stderr)
        else:
            _cmd_inspect(args, stdin, stdout)
    except UsageError as exc:
        stderr.write(f"{parser.format_usage().rstrip()}\nsocialgesture: error: {exc}\n")
        return EXIT_USAGE
    except (DataError, BundleFormatError, ClipFormatError, TrainingError, DegenerateBodyError, ProtocolError, ValueError) as exc:
        reason = " ".join(str(exc).split())
        stderr.write(f"socialgesture: error: {reason}\n")
        return EXIT_DATA
    finally:
        if args.verbose:
            logging.getLogger("socialgesture").handlers.clear()
    return EXIT_OK


def main() -> None:
    try:
        code = run_cli()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the interpreter's flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)
