"""Random-instance builders shared by the property tests."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from oracles import brute_force_predictions, brute_force_stump
from socialgesture.classifier import train_stump
from socialgesture.detector import DetectionEvent, DetectorConfig, GestureTrigger
from socialgesture.protocol import Bye, Conf, Hello, Trigger
from socialgesture.skeleton import ATOMIC_GESTURES, N_JOINTS, Clip, GestureLabel, LabelSpan


def random_clip(rng: np.random.Generator, max_frames: int = 12) -> Clip:
    """A valid clip whose coordinates already sit on the 6-decimal grid."""
    n = int(rng.integers(1, max_frames + 1))
    fps = float(rng.choice([15.0, 24.0, 30.0, 60.0, 29.97]))
    positions = np.round(rng.uniform(-3, 3, size=(n, N_JOINTS, 3)), 6)
    states = rng.integers(0, 5, size=(n, 2))
    spans = []
    for g in rng.choice(ATOMIC_GESTURES, size=int(rng.integers(0, 3)), replace=False):
        a = int(rng.integers(0, n))
        b = int(rng.integers(a, n))
        spans.append(LabelSpan(GestureLabel(int(g)), a, b))
    meta = {f"k{i}": str(rng.integers(0, 1000)) for i in range(int(rng.integers(0, 3)))}
    if rng.random() < 0.3:
        meta["note"] = 'quote " and unicode é'
    return Clip(positions, states, fps, spans, meta)


def _conf_values(rng: np.random.Generator, keys) -> dict:
    out = {}
    for g in keys:
        r = rng.random()
        out[g] = 0.0 if r < 0.1 else 1.0 if r < 0.2 else float(rng.random())
    return out


def random_message(rng: np.random.Generator):
    kind = int(rng.integers(0, 4))
    peer = rng.choice(["A", "B", "peer-7", "Ωmega", "x" * 40])
    if kind == 0:
        return Hello(str(peer))
    if kind == 1:
        k = int(rng.integers(0, len(ATOMIC_GESTURES) + 1))
        keys = rng.choice(ATOMIC_GESTURES, size=k, replace=False)
        conf = _conf_values(rng, [GestureLabel(int(g)) for g in keys])
        return Conf(str(peer), float(rng.uniform(0, 1e4)), conf)
    if kind == 2:
        g = GestureLabel(int(rng.integers(0, int(GestureLabel.NONE))))
        return Trigger(g, float(rng.uniform(0, 1e4)), float(rng.random()))
    return Bye(str(peer))


def random_dataset(rng: np.random.Generator):
    n = int(rng.integers(1, 51))
    F = int(rng.integers(1, 9))
    kind = rng.integers(0, 3)
    if kind == 0:
        X = rng.integers(0, 4, size=(n, F)).astype(float)  # many ties
    elif kind == 1:
        X = rng.normal(size=(n, F))
    else:
        X = np.round(rng.uniform(-2, 2, size=(n, F)), 1)
    y = rng.choice([-1, 1], size=n)
    if rng.random() < 0.5:
        w = np.full(n, 1.0 / n)
    else:
        w = rng.random(n) + 1e-3
        w = w / w.sum()
    return X, y, w


def check_against_oracle(X, y, w) -> bool:
    stump, eps = train_stump(X, y, w)
    err, f, thr, p = brute_force_stump(X, y, w)
    if eps != float(err):
        return False
    # the chosen stump's own exact error must also be minimal
    ours = brute_force_predictions(X, stump.feature_index, Fraction(stump.threshold), stump.polarity)
    own = sum((Fraction(float(wi)) for wi, pi, yi in zip(w, ours, y) if pi != yi), Fraction(0))
    return float(own) == float(err)


def raw_events(ends, conf, config: DetectorConfig) -> list[DetectionEvent]:
    """Atomic events before HUG composition, in emission order."""
    triggers = [GestureTrigger(g, config) for g in ATOMIC_GESTURES]
    out = []
    for i, row in zip(ends.tolist(), conf.tolist()):
        out.extend(e for t, c in zip(triggers, row) if (e := t.update(i, c)) is not None)
    out.extend(e for t in triggers if (e := t.flush(int(ends[-1]))) is not None)
    return out
