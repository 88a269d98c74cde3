"""One-vs-rest discrete AdaBoost over decision stumps.

Each atomic gesture gets its own binary ensemble. A stump predicts +1 when
``polarity * (x[feature] - threshold) > 0`` and -1 otherwise. Confidence is
the ensemble margin rescaled to [0, 1]::

    c = (1 + sum(alpha_t * h_t(x)) / sum(alpha_t)) / 2
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .features import FEATURE_SPEC_VERSION, N_FEATURES, WindowConfig, clip_window_features
from .skeleton import ATOMIC_GESTURES, Clip, GestureLabel

log = logging.getLogger(__name__)

BUNDLE_VERSION = 1
EPS_CLAMP = 1e-10
_UNIT_ROUNDOFF = 2.0**-53
_BELOW_MIN_OFFSET = 1.0


class TrainingError(ValueError):
    pass


class BundleFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Stump:
    feature_index: int
    threshold: float
    polarity: int
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.feature_index < N_FEATURES:
            raise ValueError(f"feature_index {self.feature_index} out of range")
        if self.polarity not in (1, -1):
            raise ValueError("polarity must be +1 or -1")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be finite and >= 0")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    def predict(self, X: np.ndarray) -> np.ndarray:
        """+1/-1 votes for the rows of ``X`` (or a single vector)."""
        X = np.asarray(X, dtype=np.float64)
        col = X[..., self.feature_index]
        return np.where(self.polarity * (col - self.threshold) > 0, 1.0, -1.0)


@dataclass(frozen=True)
class BoostModel:
    gesture: GestureLabel
    stumps: tuple[Stump, ...]
    trained_rounds: int
    # clamped weighted error of each kept round; diagnostics only
    round_errors: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.stumps:
            raise ValueError("a trained model needs at least one stump")
        if not sum(s.alpha for s in self.stumps) > 0:
            raise ValueError("sum of alphas must be positive")

    @property
    def alpha_sum(self) -> float:
        total = 0.0
        for s in self.stumps:
            total += s.alpha
        return total

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        m = np.zeros(X.shape[:-1])
        for s in self.stumps:
            m = m + s.alpha * s.predict(X)
        return m


def predict_confidence(model: BoostModel, x: np.ndarray) -> np.ndarray | float:
    """Normalized margin confidence in [0, 1]; accepts one vector or a (n, 32) batch."""
    if not model.stumps:
        raise ValueError("empty model")
    x = np.asarray(x, dtype=np.float64)
    c = (1.0 + model.margin(x) / model.alpha_sum) / 2.0
    c = np.clip(c, 0.0, 1.0)
    return float(c) if c.ndim == 0 else c


# ---------------------------------------------------------------------------
# weak learner
# ---------------------------------------------------------------------------


def _check_weights(w: np.ndarray, n: int) -> None:
    if w.shape != (n,):
        raise ValueError("weights and samples differ in length")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    if abs(math.fsum(w.tolist()) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1 within 1e-9")


class StumpSearch:
    """Exhaustive stump search over a fixed sample set.

    Sorting is done once; each :meth:`best` call is a cumulative-sum scan.
    Candidates whose approximate error lies within a tiny slack of the
    minimum are re-scored with an exactly rounded sum (``math.fsum``), so the
    returned error is the exact minimum and tie-breaking is reliable.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray) -> None:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("need a non-empty (n, F) sample matrix")
        if y.shape != (X.shape[0],):
            raise ValueError("samples and labels differ in length")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be +1 or -1")
        if X.shape[1] > N_FEATURES:
            raise ValueError(f"at most {N_FEATURES} features")
        self.X = X
        # feature-major layout: row f holds feature f in ascending order
        XT = np.ascontiguousarray(X.T)
        self.order = np.argsort(XT, axis=1, kind="stable")
        self.sorted_x = np.take_along_axis(XT, self.order, axis=1)
        # split k puts sorted entries [k:] on the "above" side; k = 0 is the below-minimum threshold
        valid = np.zeros(XT.shape, dtype=bool)
        valid[:, 0] = True
        valid[:, 1:] = self.sorted_x[:, 1:] > self.sorted_x[:, :-1]
        self.valid = valid
        self._penalty = np.where(valid, 0.0, np.inf)
        thr = np.empty(XT.shape)
        thr[:, 0] = self.sorted_x[:, 0] - _BELOW_MIN_OFFSET
        lo, hi = self.sorted_x[:, :-1], self.sorted_x[:, 1:]
        mid = lo + (hi - lo) / 2.0
        # adjacent floats have no midpoint; x > lo still splits them
        thr[:, 1:] = np.where(mid < hi, mid, lo)
        self.thresholds = thr
        self._set_labels(y)

    def _set_labels(self, y: np.ndarray) -> None:
        self.y = y.astype(np.int64)
        self.sorted_pos = self.y[self.order] == 1
        self._signs = np.where(self.sorted_pos, 1.0, -1.0)

    def relabel(self, y: np.ndarray) -> StumpSearch:
        """A search over the same samples with new labels, reusing the sort."""
        y = np.asarray(y)
        if y.shape != self.y.shape or not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be +1/-1 and match the sample count")
        clone = object.__new__(StumpSearch)
        clone.__dict__.update(self.__dict__)
        clone._set_labels(y)
        return clone

    def _exact_error(self, ws: np.ndarray, f: int, k: int, p: int) -> float:
        """Correctly rounded weighted error; ``ws`` is the weight matrix in sorted order."""
        pos = self.sorted_pos[f]
        row = ws[f]
        if p == 1:
            wrong = (row[:k][pos[:k]], row[k:][~pos[k:]])
        else:
            wrong = (row[:k][~pos[:k]], row[k:][pos[k:]])
        return math.fsum(np.concatenate(wrong).tolist())

    def best(self, w: np.ndarray) -> tuple[Stump, float]:
        n = self.X.shape[0]
        w = np.asarray(w, dtype=np.float64)
        _check_weights(w, n)
        ws = np.take(w, self.order)
        # left[f, k] = signed weight (+pos, -neg) strictly before split k
        left = np.empty(ws.shape)
        left[:, 0] = 0.0
        np.multiply(ws[:, :-1], self._signs[:, :-1], out=left[:, 1:])
        np.cumsum(left[:, 1:], axis=1, out=left[:, 1:])
        p_tot = float(w[self.y == 1].sum())
        n_tot = float(w[self.y == -1].sum())
        err_plus = left + n_tot  # errors when "above" predicts +1
        err_minus = np.subtract(p_tot, left, out=left)
        err_plus += self._penalty
        err_minus += self._penalty
        lowest = min(err_plus.min(), err_minus.min())
        # a recursive sum of n terms with |terms| summing to 1 is off by at most n*u;
        # doubling covers both the scanned minimum and each candidate
        slack = 4.0 * (n + 2) * _UNIT_ROUNDOFF
        cands: list[tuple[float, int, float, int]] = []
        for p, err in ((1, err_plus), (-1, err_minus)):
            fs, ks = np.nonzero(err <= lowest + slack)
            for f, k in zip(fs.tolist(), ks.tolist()):
                exact = self._exact_error(ws, f, k, p)
                # order: error, feature, threshold, polarity (+1 first)
                cands.append((exact, f, float(self.thresholds[f, k]), -p))
        exact, f, thr, neg_p = min(cands)
        return Stump(f, thr, -neg_p), exact


def train_stump(samples: np.ndarray, labels: Sequence[int], weights: Sequence[float]) -> tuple[Stump, float]:
    """Best stump (alpha 0) and its weighted error over all features, thresholds and polarities."""
    X = np.asarray(samples, dtype=np.float64)
    if X.size == 0:
        raise ValueError("empty sample set")
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(labels)
    if y.shape != (X.shape[0],):
        raise ValueError("samples and labels differ in length")
    return StumpSearch(X, y).best(np.asarray(weights, dtype=np.float64))


# ---------------------------------------------------------------------------
# boosting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    rounds: int = 50
    seed: int = 0
    volunteers: int = 12
    clips_per_gesture_per_volunteer: int = 5

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.volunteers < 1:
            raise ValueError("volunteers must be >= 1")


def train_adaboost(
    samples: np.ndarray,
    labels: Sequence[int],
    config: TrainConfig | None = None,
    gesture: GestureLabel = GestureLabel.R5,
    search: StumpSearch | None = None,
) -> BoostModel:
    """Discrete AdaBoost.

    Each round's error is clamped to [1e-10, 0.5 - 1e-10] before computing
    alpha; a round whose raw error is >= 0.5 is discarded and training stops.
    Training also stops after a zero-error round, since every later round
    would pick the same stump again.

    The weight-normalization invariant and the training-error bound
    ``err <= prod 2 sqrt(eps_t (1 - eps_t))`` are checked on every run.
    """
    config = config or TrainConfig()
    if search is None:
        X = np.asarray(samples, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        search = StumpSearch(X, np.asarray(labels))
    X, y = search.X, search.y
    n_pos = int(np.sum(y == 1))
    if n_pos == 0 or n_pos == y.shape[0]:
        raise TrainingError("training needs samples of both classes")
    n = y.shape[0]
    w = np.full(n, 1.0 / n)
    margin = np.zeros(n)
    stumps: list[Stump] = []
    errors: list[float] = []
    for _ in range(config.rounds):
        stump, eps = search.best(w)
        if eps >= 0.5:
            break
        eps_c = min(max(eps, EPS_CLAMP), 0.5 - EPS_CLAMP)
        alpha = 0.5 * math.log((1.0 - eps_c) / eps_c)
        stump = Stump(stump.feature_index, stump.threshold, stump.polarity, alpha)
        h = stump.predict(X)
        w = w * np.exp(-alpha * y * h)
        w = w / w.sum()
        if abs(math.fsum(w.tolist()) - 1.0) > 1e-9 or np.any(w < 0):
            raise RuntimeError("boosting weights lost normalization")
        margin = margin + alpha * h
        stumps.append(stump)
        errors.append(eps_c)
        if eps == 0.0:
            break
    if not stumps:
        raise TrainingError("no stump beats chance on this data")
    bound = 1.0
    for e in errors:
        bound *= 2.0 * math.sqrt(e * (1.0 - e))
    train_err = float(np.mean(y * margin <= 0))
    if train_err > bound:
        raise RuntimeError(f"training error {train_err} exceeds boosting bound {bound}")
    return BoostModel(GestureLabel(gesture), tuple(stumps), len(stumps), tuple(errors))


def training_error(model: BoostModel, X: np.ndarray, y: Sequence[int]) -> float:
    y = np.asarray(y)
    return float(np.mean(y * model.margin(X) <= 0))


def error_bound(model: BoostModel) -> float:
    bound = 1.0
    for e in model.round_errors:
        bound *= 2.0 * math.sqrt(e * (1.0 - e))
    return bound


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelBundle:
    models: tuple[BoostModel, ...]
    feature_spec_version: int = FEATURE_SPEC_VERSION
    train_meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        have = [m.gesture for m in self.models]
        if len(set(have)) != len(have):
            raise ValueError("duplicate gesture model in bundle")
        missing = [g.name for g in ATOMIC_GESTURES if g not in have]
        if missing:
            raise ValueError(f"bundle missing model(s) for {', '.join(missing)}")
        extra = [g.name for g in have if not g.is_atomic]
        if extra:
            raise ValueError(f"bundle has models for non-atomic {', '.join(extra)}")
        object.__setattr__(self, "models", tuple(sorted(self.models, key=lambda m: int(m.gesture))))
        object.__setattr__(self, "train_meta", dict(self.train_meta))

    def model(self, gesture: GestureLabel) -> BoostModel:
        return self.models[int(gesture)]

    def confidences(self, X: np.ndarray) -> np.ndarray:
        """(n, 32) -> (n, 8) confidences in gesture code order."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.stack([np.atleast_1d(predict_confidence(m, X)) for m in self.models], axis=1)

    @property
    def window(self) -> WindowConfig:
        return WindowConfig(int(self.train_meta.get("window", 15)))


def window_labels(clip: Clip, ends: np.ndarray, window: int) -> dict[GestureLabel, np.ndarray]:
    """Per gesture, a mask of windows lying fully inside one of its spans."""
    starts = ends - window + 1
    masks: dict[GestureLabel, np.ndarray] = {}
    for s in clip.spans:
        inside = (starts >= s.start_frame) & (ends <= s.end_frame)
        masks[s.gesture] = masks.get(s.gesture, np.zeros(ends.shape, dtype=bool)) | inside
    return masks


def train_bundle(
    corpus: Iterable[Clip],
    window: WindowConfig | None = None,
    config: TrainConfig | None = None,
) -> ModelBundle:
    """Train one ensemble per atomic gesture from labeled clips.

    Positives for gesture g are windows fully inside a g span. Negatives are
    windows fully inside spans of other gestures plus every window of the
    idle clips (clips without spans).
    """
    window = window or WindowConfig()
    config = config or TrainConfig()
    feats: list[np.ndarray] = []
    inside: dict[GestureLabel, list[np.ndarray]] = {g: [] for g in ATOMIC_GESTURES}
    idle: list[np.ndarray] = []
    volunteers: set[str] = set()
    n_idle_clips = 0
    for clip in corpus:
        ends, X = clip_window_features(clip, window)
        masks = window_labels(clip, ends, window.window)
        feats.append(X)
        for g in ATOMIC_GESTURES:
            inside[g].append(masks.get(g, np.zeros(len(ends), dtype=bool)))
        idle.append(np.full(len(ends), not clip.spans))
        n_idle_clips += not clip.spans
        if "volunteer" in clip.meta:
            volunteers.add(clip.meta["volunteer"])
    if not feats:
        raise TrainingError("empty corpus")
    X_all = np.concatenate(feats)
    idle_mask = np.concatenate(idle)
    in_span = {g: np.concatenate(m) for g, m in inside.items()}
    missing = [g.name for g in ATOMIC_GESTURES if not in_span[g].any()]
    if missing:
        raise TrainingError(f"corpus has no usable windows for gesture(s): {', '.join(missing)}")
    if n_idle_clips == 0:
        raise TrainingError("corpus has no NONE (idle) clips")
    any_span = np.zeros(X_all.shape[0], dtype=bool)
    for m in in_span.values():
        any_span |= m
    # every window inside some span or from an idle clip is a sample for every model
    keep = any_span | idle_mask
    X = X_all[keep]
    search: StumpSearch | None = None
    models = []
    for g in ATOMIC_GESTURES:
        y = np.where(in_span[g][keep], 1, -1)
        search = StumpSearch(X, y) if search is None else search.relabel(y)
        log.info("training %s: %d positive / %d negative windows", g.name, int((y == 1).sum()), int((y == -1).sum()))
        models.append(train_adaboost(X, y, config, gesture=g, search=search))
    meta = {
        "seed": str(config.seed),
        "rounds": str(config.rounds),
        "volunteers": str(len(volunteers) if volunteers else config.volunteers),
        "window": str(window.window),
        "stride": str(window.stride),
        "clips": str(len(feats)),
    }
    return ModelBundle(tuple(models), FEATURE_SPEC_VERSION, meta)


def save_bundle(bundle: ModelBundle) -> bytes:
    """gmodel v1 text encoding. Floats are written with full round-trip precision."""
    doc = {
        "v": BUNDLE_VERSION,
        "feature_spec": bundle.feature_spec_version,
        "meta": {str(k): str(v) for k, v in sorted(bundle.train_meta.items())},
        "models": [
            {
                "g": m.gesture.name,
                "stumps": [
                    {"f": s.feature_index, "t": s.threshold, "p": s.polarity, "a": s.alpha} for s in m.stumps
                ],
            }
            for m in bundle.models
        ],
    }
    return (json.dumps(doc, separators=(",", ":")) + "\n").encode("utf-8")


def load_bundle(data: bytes | str, expected_feature_spec: int | None = FEATURE_SPEC_VERSION) -> ModelBundle:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BundleFormatError(f"malformed bundle: {exc}") from None
    if not isinstance(doc, dict):
        raise BundleFormatError("bundle must be a JSON object")
    if doc.get("v") != BUNDLE_VERSION:
        raise BundleFormatError(f"unsupported bundle version {doc.get('v')!r}")
    spec = doc.get("feature_spec")
    if expected_feature_spec is not None and spec != expected_feature_spec:
        raise BundleFormatError(f"feature spec version {spec!r} does not match {expected_feature_spec}")
    raw_models = doc.get("models")
    if not isinstance(raw_models, list):
        raise BundleFormatError("models must be a list")
    models = []
    seen: set[GestureLabel] = set()
    for raw in raw_models:
        try:
            g = GestureLabel[raw["g"]]
            if g in seen:
                raise BundleFormatError(f"duplicate model for {g.name}")
            seen.add(g)
            stumps = tuple(
                Stump(int(s["f"]), float(s["t"]), int(s["p"]), float(s["a"])) for s in raw["stumps"]
            )
            models.append(BoostModel(g, stumps, len(stumps)))
        except BundleFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleFormatError(f"malformed model entry: {exc}") from None
    missing = [g.name for g in ATOMIC_GESTURES if g not in seen]
    if missing:
        raise BundleFormatError(f"bundle missing model(s) for {', '.join(missing)}")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise BundleFormatError("meta must be an object")
    try:
        return ModelBundle(tuple(models), int(spec), {str(k): str(v) for k, v in meta.items()})
    except ValueError as exc:
        raise BundleFormatError(str(exc)) from None
