"""Prompted-gesture pilot on synthetic participants, confusion matrices and reports.

Each participant gets a prompt count in [27, 30] and a random sequence of
gestures from the six-gesture prompt set; every prompt is enacted as a 7 s
synthetic clip and classified. Hand-on-mat gestures (RM, LM) are evaluated in
a separate block and kept out of the headline matrix. A NONE prediction is
scored as an error and reported in its own column.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .classifier import ModelBundle
from .detector import DetectorConfig, classify_prompted_clip
from .features import FEATURE_SPEC_VERSION
from .skeleton import SIX_GESTURES, GestureLabel, SynthParams, derive_seed, synth_clip

_PILOT_TAG = 0x9170_7E57


class ConfusionMatrix:
    """Counts of true (rows) versus predicted (columns) labels.

    Columns are the row labels, then any other predicted label, then NONE,
    all in gesture code order.
    """

    def __init__(self, rows: Sequence[GestureLabel], cols: Sequence[GestureLabel], counts: np.ndarray) -> None:
        self.rows = tuple(rows)
        self.cols = tuple(cols)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (len(self.rows), len(self.cols)):
            raise ValueError("counts shape does not match labels")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def percentages(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = 100.0 * self.counts / totals
        return np.where(totals > 0, pct, 0.0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return sum(int(self.counts[i, self.cols.index(g)]) for i, g in enumerate(self.rows) if g in self.cols)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def recall(self, label: GestureLabel) -> float:
        i = self.rows.index(label)
        n = int(self.counts[i].sum())
        return int(self.counts[i, self.cols.index(label)]) / n if n else float("nan")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and np.array_equal(self.counts, other.counts)

    __hash__ = None  # type: ignore[assignment]


def confusion_matrix(
    truth: Sequence[GestureLabel],
    predicted: Sequence[GestureLabel],
    labels: Sequence[GestureLabel] | None = None,
) -> ConfusionMatrix:
    if len(truth) != len(predicted):
        raise ValueError("truth and predicted differ in length")
    if not truth:
        raise ValueError("empty input")
    truth = [GestureLabel(t) for t in truth]
    predicted = [GestureLabel(p) for p in predicted]
    rows = sorted(set(labels) if labels is not None else set(truth))
    missing = set(truth) - set(rows)
    if missing:
        raise ValueError(f"true labels outside the row set: {sorted(g.name for g in missing)}")
    extra = sorted(set(predicted) - set(rows) - {GestureLabel.NONE})
    cols = [*rows, *extra, GestureLabel.NONE]
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        counts[rows.index(t), cols.index(p)] += 1
    return ConfusionMatrix(rows, cols, counts)


@dataclass(frozen=True)
class PilotConfig:
    participants: int = 17
    prompts_range: tuple[int, int] = (27, 30)
    prompt_set: tuple[GestureLabel, ...] = SIX_GESTURES
    enactment_duration: float = 7.0
    fps: float = 30.0
    seed: int = 0
    synth: SynthParams = field(default_factory=SynthParams)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    # RM and LM prompts per participant in the separate hand-on-mat block; 0 skips it
    mat_prompts_each: int = 3

    def __post_init__(self) -> None:
        lo, hi = self.prompts_range
        if self.participants < 1:
            raise ValueError("participants must be >= 1")
        if not 1 <= lo <= hi:
            raise ValueError("prompt range must be non-empty and positive")
        if not self.prompt_set:
            raise ValueError("prompt set must be non-empty")
        if self.mat_prompts_each < 0:
            raise ValueError("mat_prompts_each must be >= 0")


@dataclass(frozen=True)
class ParticipantResult:
    index: int
    prompts: int
    correct: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.prompts


@dataclass(frozen=True)
class Trial:
    participant: int
    prompt: GestureLabel
    predicted: GestureLabel
    seed: int


@dataclass
class PilotReport:
    matrix: ConfusionMatrix
    participants: list[ParticipantResult]
    mat_matrix: ConfusionMatrix | None
    trials: list[Trial]
    config: PilotConfig

    @property
    def overall_accuracy(self) -> float:
        return self.matrix.accuracy

    @property
    def recalls(self) -> dict[GestureLabel, float]:
        return {g: self.matrix.recall(g) for g in self.matrix.rows}

    @property
    def rm_rate(self) -> float | None:
        return None if self.mat_matrix is None else self.mat_matrix.recall(GestureLabel.RM)

    @property
    def lm_rate(self) -> float | None:
        return None if self.mat_matrix is None else self.mat_matrix.recall(GestureLabel.LM)

    @property
    def seed(self) -> int:
        return self.config.seed


def _participant_plan(config: PilotConfig, p: int) -> tuple[int, list[GestureLabel], list[int], list[GestureLabel], list[int]]:
    rng = np.random.Generator(np.random.PCG64(derive_seed(_PILOT_TAG, config.seed, p)))
    lo, hi = config.prompts_range
    n = int(rng.integers(lo, hi + 1))
    prompts = [config.prompt_set[int(i)] for i in rng.integers(0, len(config.prompt_set), size=n)]
    participant_seed = int(rng.integers(0, 2**63))
    seeds = [int(s) for s in rng.integers(0, 2**63, size=n)]
    mat = [GestureLabel.RM, GestureLabel.LM] * config.mat_prompts_each
    mat = [mat[int(i)] for i in rng.permutation(len(mat))]
    mat_seeds = [int(s) for s in rng.integers(0, 2**63, size=len(mat))]
    return participant_seed, prompts, seeds, mat, mat_seeds


def run_pilot(bundle: ModelBundle, config: PilotConfig | None = None) -> PilotReport:
    """Run the prompted-gesture pilot. Deterministic under ``config.seed``."""
    config = config or PilotConfig()
    if bundle.feature_spec_version != FEATURE_SPEC_VERSION:
        raise ValueError(
            f"bundle feature spec {bundle.feature_spec_version} does not match {FEATURE_SPEC_VERSION}"
        )
    truth: list[GestureLabel] = []
    predicted: list[GestureLabel] = []
    mat_truth: list[GestureLabel] = []
    mat_pred: list[GestureLabel] = []
    trials: list[Trial] = []
    per_participant: list[ParticipantResult] = []
    for p in range(config.participants):
        participant_seed, prompts, seeds, mat, mat_seeds = _participant_plan(config, p)
        params = replace(
            config.synth, participant_seed=participant_seed, fps=config.fps, duration=config.enactment_duration
        )
        correct = 0
        for g, s in zip(prompts, seeds):
            guess = classify_prompted_clip(synth_clip(g, params, s), bundle, config.detector)
            truth.append(g)
            predicted.append(guess)
            trials.append(Trial(p, g, guess, s))
            correct += guess is g
        per_participant.append(ParticipantResult(p, len(prompts), correct))
        for g, s in zip(mat, mat_seeds):
            guess = classify_prompted_clip(synth_clip(g, params, s), bundle, config.detector)
            mat_truth.append(g)
            mat_pred.append(guess)
            trials.append(Trial(p, g, guess, s))
    matrix = confusion_matrix(truth, predicted, labels=config.prompt_set)
    mat_matrix = confusion_matrix(mat_truth, mat_pred, labels=(GestureLabel.RM, GestureLabel.LM)) if mat_truth else None
    return PilotReport(matrix, per_participant, mat_matrix, trials, config)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _rate(x: float | None) -> str:
    return "skipped" if x is None else f"{x:.6f}"


def _text(r: PilotReport) -> str:
    m = r.matrix
    cfg = r.config
    out = io.StringIO()
    w = out.write
    w("Pilot report\n")
    w(
        f"seed={cfg.seed} participants={cfg.participants} prompts={cfg.prompts_range[0]}-{cfg.prompts_range[1]} "
        f"noise_sigma={cfg.synth.noise_sigma:g} duration={cfg.enactment_duration:g}s fps={cfg.fps:g}\n\n"
    )
    w("Confusion matrix (percent of true gestures)\n")
    width = 7
    w("true\\pred".ljust(10) + "".join(c.name.rjust(width) for c in m.cols) + "      n\n")
    pct = m.percentages
    for i, g in enumerate(m.rows):
        w(g.name.ljust(10) + "".join(f"{v:{width}.1f}" for v in pct[i]) + f"{int(m.counts[i].sum()):7d}\n")
    w("\nCounts\n")
    w("true\\pred".ljust(10) + "".join(c.name.rjust(width) for c in m.cols) + "\n")
    for i, g in enumerate(m.rows):
        w(g.name.ljust(10) + "".join(f"{int(v):{width}d}" for v in m.counts[i]) + "\n")
    w(f"\noverall accuracy: {r.overall_accuracy * 100:.1f}% ({m.correct}/{m.total})\n")
    w("per-gesture recall: " + " ".join(f"{g.name}={v * 100:.1f}%" for g, v in r.recalls.items()) + "\n")
    if r.mat_matrix is None:
        w("hand-on-mat block: skipped\n")
    else:
        w(f"hand-on-mat block: RM={r.rm_rate * 100:.1f}% LM={r.lm_rate * 100:.1f}% (n={r.mat_matrix.total})\n")
    w("\nper-participant accuracy\n")
    for p in r.participants:
        w(f"  P{p.index:02d}: {p.correct}/{p.prompts} = {p.accuracy * 100:.1f}%\n")
    return out.getvalue()


def _csv(r: PilotReport) -> str:
    m = r.matrix
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["true", *(c.name for c in m.cols)])
    for i, g in enumerate(m.rows):
        wr.writerow([g.name, *(int(v) for v in m.counts[i])])
    wr.writerow(["percent", *(c.name for c in m.cols)])
    pct = m.percentages
    for i, g in enumerate(m.rows):
        wr.writerow([g.name, *(f"{v:.6f}" for v in pct[i])])
    wr.writerow(["overall_accuracy", f"{r.overall_accuracy:.6f}"])
    wr.writerow(["rm_rate", _rate(r.rm_rate)])
    wr.writerow(["lm_rate", _rate(r.lm_rate)])
    wr.writerow(["seed", str(r.seed)])
    return out.getvalue()


def report(r: PilotReport, fmt: str = "text") -> bytes:
    if fmt == "text":
        return _text(r).encode("utf-8")
    if fmt == "csv":
        return _csv(r).encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r} (expected text or csv)")


@dataclass
class CsvReport:
    cols: list[str]
    counts: dict[str, list[int]]
    percentages: dict[str, list[float]]
    overall_accuracy: float
    rm_rate: float | None
    lm_rate: float | None
    seed: int


def parse_report_csv(data: bytes | str) -> CsvReport:
    """Read back a csv report."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "true":
        raise ValueError("not a pilot report csv")
    cols = rows[0][1:]
    counts: dict[str, list[int]] = {}
    pct: dict[str, list[float]] = {}
    scalars: dict[str, str] = {}
    block = counts
    for row in rows[1:]:
        key = row[0]
        if key == "percent":
            block = pct
        elif key in ("overall_accuracy", "rm_rate", "lm_rate", "seed"):
            scalars[key] = row[1]
        elif block is counts:
            counts[key] = [int(v) for v in row[1:]]
        else:
            pct[key] = [float(v) for v in row[1:]]

    def rate(key: str) -> float | None:
        return None if scalars[key] == "skipped" else float(scalars[key])

    return CsvReport(
        cols, counts, pct, float(scalars["overall_accuracy"]), rate("rm_rate"), rate("lm_rate"), int(scalars["seed"])
    )
