"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also collected into an "acceptance criteria" section at the end of
every pytest run.
"""

from __future__ import annotations

import csv
import io
import time

import numpy as np

from conftest import cli, record
from helpers import check_against_oracle, random_clip, random_dataset, random_message, raw_events
from oracles import brute_force_stump
from socialgesture.classifier import (
    TrainConfig,
    TrainingError,
    error_bound,
    save_bundle,
    train_adaboost,
    train_bundle,
    train_stump,
    training_error,
    window_labels,
)
from socialgesture.detector import DetectionEvent, DetectorConfig, compose_events, detect_clip
from socialgesture.dyad import NetParams, SessionState, fuse, session_step, simulate_dyad, trigger_sequence
from socialgesture.evaluation import PilotConfig, confusion_matrix, report, run_pilot
from socialgesture.features import clip_window_features
from socialgesture.protocol import (
    Conf,
    ConfidenceRangeError,
    Hello,
    ProtocolError,
    TruncatedMessage,
    decode_message,
    encode_message,
)
from socialgesture.skeleton import (
    SIX_GESTURES,
    ClipFormatError,
    GestureLabel,
    SynthParams,
    parse_clip,
    serialize_clip,
    synth_clip,
    synth_hug_clip,
)

G = GestureLabel


def finish(criterion: int, checks: dict[str, bool], detail: str) -> None:
    failed = [name for name, ok in checks.items() if not ok]
    record(criterion, not failed, detail + (f"; failed: {', '.join(failed)}" if failed else ""))
    assert not failed, failed


# 1 -----------------------------------------------------------------------------------


def test_criterion_1_pilot_accuracy(pipeline):
    start = time.perf_counter()
    rep = pipeline["root"] / "pilot.csv"
    code, _, err = cli("eval", "pilot", "--model", str(pipeline["model"]), "--seed", "42", "--report", str(rep))
    assert code == 0, err
    seconds = pipeline["seconds"] + time.perf_counter() - start
    rows = list(csv.reader(io.StringIO(rep.read_text())))
    cols = rows[0][1:]
    counts = {}
    for r in rows[1:]:
        if r[0] == "percent":
            break
        counts[r[0]] = [int(v) for v in r[1:]]
    scalars = {r[0]: r[1] for r in rows if r[0] in ("overall_accuracy", "rm_rate", "lm_rate")}
    total = sum(sum(v) for v in counts.values())
    correct = sum(v[cols.index(g)] for g, v in counts.items())
    overall = correct / total
    recalls = {g: v[cols.index(g)] / sum(v) for g, v in counts.items()}
    rm, lm = float(scalars["rm_rate"]), float(scalars["lm_rate"])
    checks = {
        "overall >= 0.89": overall >= 0.89,
        "csv accuracy consistent": abs(overall - float(scalars["overall_accuracy"])) <= 1e-6,
        "six gestures present": sorted(counts) == sorted(g.name for g in SIX_GESTURES),
        "every recall >= 0.80": min(recalls.values()) >= 0.80,
        "RM >= 0.80": rm >= 0.80,
        "LM >= 0.80": lm >= 0.80,
        "runtime < 120 s": seconds < 120.0,
    }
    finish(
        1,
        checks,
        f"overall={overall:.4f} ({correct}/{total}), min recall={min(recalls.values()):.4f}, "
        f"RM={rm:.4f}, LM={lm:.4f}, gen+train+eval {seconds:.0f}s",
    )


# 2 -----------------------------------------------------------------------------------


def test_criterion_2_degradation_curve(default_bundle):
    sigmas = (0.0, 0.01, 0.02, 0.04)
    means = []
    for sigma in sigmas:
        accs = [
            run_pilot(default_bundle, PilotConfig(seed=s, synth=SynthParams(noise_sigma=sigma), mat_prompts_each=0)).overall_accuracy
            for s in (1, 2, 3)
        ]
        means.append(float(np.mean(accs)))
    checks = {
        "non-increasing": all(b <= a for a, b in zip(means, means[1:])),
        "1.0 at sigma 0": means[0] == 1.0,
    }
    curve = ", ".join(f"{s:g}:{m:.4f}" for s, m in zip(sigmas, means))
    finish(2, checks, f"mean accuracy over seeds 1-3 by sigma: {curve}")


# 3 -----------------------------------------------------------------------------------


def test_criterion_3_stump_oracle():
    rng = np.random.default_rng(20240601)
    agree = sum(check_against_oracle(*random_dataset(rng)) for _ in range(200))
    ties = {}
    # identical features: lowest feature wins
    s, _ = train_stump(np.array([[0.0, 0.0], [1.0, 1.0]]), [-1, 1], [0.5, 0.5])
    ties["feature"] = s.feature_index == 0
    # two thresholds with equal error: lowest threshold wins
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    s, _ = train_stump(X, [-1, 1, -1, 1], [0.25] * 4)
    _, _, thr, p = brute_force_stump(X, [-1, 1, -1, 1], [0.25] * 4)
    ties["threshold"] = s.threshold == 0.5 == float(thr) and s.polarity == p == 1
    # both polarities equal: +1 wins
    s, _ = train_stump(np.array([[0.0], [0.0]]), [1, -1], [0.5, 0.5])
    ties["polarity"] = s.polarity == 1
    checks = {"200/200 exact": agree == 200, **{f"tie on {k}": v for k, v in ties.items()}}
    finish(3, checks, f"{agree}/200 datasets match the exhaustive minimum exactly; tie-breaks {sorted(k for k, v in ties.items() if v)}")


# 4 -----------------------------------------------------------------------------------


def test_criterion_4_adaboost_bound(small_corpus, small_bundle):
    rng = np.random.default_rng(4)
    runs = held = 0
    for _ in range(150):
        n = int(rng.integers(4, 80))
        X = rng.normal(size=(n, int(rng.integers(1, 6))))
        y = np.where(X[:, 0] + rng.normal(scale=float(rng.uniform(0, 2)), size=n) > 0, 1, -1)
        y[0], y[1] = 1, -1
        try:
            model = train_adaboost(X, y, TrainConfig(rounds=int(rng.integers(1, 40))))
        except TrainingError:
            continue
        runs += 1
        held += training_error(model, X, y) <= error_bound(model)
    # the bundle models, on the exact samples they were trained on
    feats, masks, idle = [], [], []
    for clip in small_corpus:
        ends, X = clip_window_features(clip, small_bundle.window)
        feats.append(X)
        masks.append(window_labels(clip, ends, small_bundle.window.window))
        idle.append(np.full(len(ends), not clip.spans))
    X_all = np.concatenate(feats)
    in_span = {g: np.concatenate([m.get(g, np.zeros(len(f), bool)) for m, f in zip(masks, feats)]) for g in G if g.is_atomic}
    keep = np.concatenate(idle) | np.any(np.stack(list(in_span.values())), axis=0)
    for m in small_bundle.models:
        y = np.where(in_span[m.gesture][keep], 1, -1)
        runs += 1
        held += training_error(m, X_all[keep], y) <= error_bound(m)
    model = train_adaboost(np.array([[0.0], [1.0], [2.0], [3.0]]), [-1, -1, 1, 1], TrainConfig(rounds=1))
    alpha = model.stumps[0].alpha
    checks = {"bound on every run": held == runs, "alpha 11.5129 +- 1e-3": abs(alpha - 11.5129) <= 1e-3}
    finish(4, checks, f"bound held on {held}/{runs} runs (incl. 8 bundle models); separable 4-point T=1 alpha={alpha:.6f}")


# 5 -----------------------------------------------------------------------------------


def test_criterion_5_determinism(tmp_path, small_corpus, small_bundle, default_bundle):
    checks = {}
    clips = [serialize_clip(synth_clip(g, SynthParams(), 13)) for g in (G.RH, G.NONE)]
    checks["clips"] = clips == [serialize_clip(synth_clip(g, SynthParams(), 13)) for g in (G.RH, G.NONE)]
    outs = [cli("gen", "--gesture", "LS", "--seed", "13")[1] for _ in range(2)]
    checks["clips via cli"] = outs[0] == outs[1] and len(outs[0]) > 0
    checks["bundles"] = save_bundle(train_bundle(small_corpus, config=TrainConfig(rounds=15, seed=5))) == save_bundle(small_bundle)
    cfg = PilotConfig(seed=42)
    reports = [run_pilot(default_bundle, cfg) for _ in range(2)]
    checks["pilot reports"] = all(report(reports[0], f) == report(reports[1], f) for f in ("text", "csv"))
    a, b = synth_clip(G.R5, SynthParams(), 1), synth_clip(G.R5, SynthParams(), 2)
    net = NetParams(jitter=0.03, drop_rate=0.1, seed=99)
    runs = [simulate_dyad(a, b, default_bundle, net=net) for _ in range(2)]
    checks["dyad traces"] = runs[0].format_trace() == runs[1].format_trace() and runs[0].format_log() == runs[1].format_log()
    finish(5, checks, "byte-identical across two runs: " + ", ".join(k for k, v in checks.items() if v))


# 6 -----------------------------------------------------------------------------------


def test_criterion_6_composite_rule(default_bundle):
    cfg = DetectorConfig()
    agree = total = hugs = suppressed = 0
    for offset in range(-24, 25):
        res = detect_clip(synth_hug_clip(SynthParams(), 8, offset_frames=offset), default_bundle, cfg)
        raw = raw_events(res.end_frames, res.confidences, cfg)
        ls = [e.peak_frame for e in raw if e.gesture is G.LS]
        rs = [e.peak_frame for e in raw if e.gesture is G.RS]
        close = any(abs(x - y) <= cfg.hug_window for x in ls for y in rs)
        gestures = [e.gesture for e in res.events]
        total += 1
        agree += bool(ls and rs) and (G.HUG in gestures) is close
        if close:
            hugs += 1
            suppressed += G.LS not in gestures and G.RS not in gestures
    ev = lambda g, peak: DetectionEvent(g, 0.8, peak - 5, peak, peak + 5)  # noqa: E731
    boundary = all(
        (G.HUG in [e.gesture for e in compose_events([ev(a, 100), ev(b, 100 + gap)])]) is (abs(gap) <= 10)
        for a, b in ((G.LS, G.RS), (G.RS, G.LS))
        for gap in (-11, -10, 0, 10, 11)
    )
    checks = {
        "generated clips": agree == total,
        "both outcomes seen": 0 < hugs < total,
        "constituents suppressed": suppressed == hugs,
        "+-10 boundary, both orders": boundary,
    }
    finish(6, checks, f"HUG iff peaks within +-10 on {agree}/{total} offsets (-24..24; {hugs} hugs, all suppressed={suppressed == hugs}); boundary ok={boundary}")


# 7 -----------------------------------------------------------------------------------


def _session_pair(local: dict, remote: dict) -> list:
    s = SessionState("A")
    session_step(s, Hello("B"))
    _, a = session_step(s, Conf("B", 1.0, remote))
    _, b = session_step(s, Conf("A", 1.0, local), local=True)
    return a + b


def test_criterion_7_dyadic_fusion(default_bundle):
    checks = {}
    f = fuse(0.9, 0.3)
    checks["fuse(0.9,0.3)=0.5196"] = abs(f - 0.5196) <= 1e-4
    trig = _session_pair({G.RH: 0.9}, {G.RH: 0.3})
    checks["0.9/0.3 triggers"] = trigger_sequence(trig) == [G.RH]
    checks["0.3/0.3 silent"] = _session_pair({G.RH: 0.3}, {G.RH: 0.3}) == []
    grid = np.linspace(0, 1, 101)
    F = np.array([[fuse(a, b) for b in grid] for a in grid])
    checks["symmetry 101x101"] = bool(np.array_equal(F, F.T))
    checks["monotone 101x101"] = bool(np.all(np.diff(F, axis=0) >= 0) and np.all(np.diff(F, axis=1) >= 0))
    checks["RH vs LH silent"] = _session_pair({G.RH: 0.9}, {G.LH: 0.9}) == [] and _session_pair({G.LH: 0.9}, {G.RH: 0.9}) == []
    rh_a, rh_b = synth_clip(G.RH, SynthParams(), 7), synth_clip(G.RH, SynthParams(), 8)
    res = simulate_dyad(rh_a, rh_b, default_bundle, net=NetParams(jitter=0.0, drop_rate=0.0))
    seq_a, seq_b = trigger_sequence(res.triggers["A"]), trigger_sequence(res.triggers["B"])
    checks["zero jitter logs identical"] = bool(seq_a) and seq_a == seq_b
    dead = simulate_dyad(rh_a, rh_b, default_bundle, net=NetParams(drop_rate=1.0))
    checks["drop 1.0 silent"] = dead.dyadic("A") == [] and dead.dyadic("B") == []
    finish(
        7,
        checks,
        f"fuse(0.9,0.3)={f:.6f}; zero-jitter sequences A={[g.name for g in seq_a]} B={[g.name for g in seq_b]}; "
        f"drop 1.0 dyadic triggers={len(dead.dyadic('A')) + len(dead.dyadic('B'))} with {dead.dropped} drops",
    )


# 8 -----------------------------------------------------------------------------------


def _classified(data: bytes, error: type[Exception]) -> bool:
    try:
        decode_message(data)
    except error:
        return True
    except Exception:  # noqa: BLE001 - anything else is a failure of classification
        return False
    return False


def test_criterion_8_protocol_and_formats():
    rng = np.random.default_rng(8)
    msgs = [random_message(rng) for _ in range(1000)]
    wire_ok = sum(decode_message(encode_message(m)) == m for m in msgs)
    clips = [random_clip(rng) for _ in range(100)]
    clip_ok = sum(parse_clip(serialize_clip(c)) == c for c in clips)

    good = serialize_clip(synth_clip(G.R5, SynthParams(duration=0.2), 0)).decode().splitlines()
    frame = good[1].replace('"j":[[', '"j":[[0,0,0],[', 1)  # 26 joints
    try:
        parse_clip("\n".join([good[0], frame]) + "\n")
        joint_ok = False
    except ClipFormatError as exc:
        joint_ok = exc.line == 2 and "26" in str(exc)
    range_ok = _classified(b'{"v":1,"type":"conf","peer":"A","t":0,"c":{"RH":1.5}}\n', ConfidenceRangeError)
    trunc_ok = _classified(encode_message(msgs[0])[:-5], TruncatedMessage)

    # no input yields anything but a message or a classified error
    total = 0
    for _ in range(3000):
        data = bytearray(encode_message(random_message(rng)))
        for _ in range(int(rng.integers(1, 4))):
            i = int(rng.integers(0, len(data))) if data else 0
            op = rng.integers(0, 3)
            if op == 0 and data:
                data[i] = int(rng.integers(0, 256))
            elif op == 1:
                del data[i:]
            else:
                data[i:i] = rng.choice([b"9" * 40, b'"', b"}", b"\n", b"-1e999", b"null"])
        try:
            m = decode_message(bytes(data))
            total += decode_message(encode_message(m)) == m
        except ProtocolError:
            total += 1
        except Exception:  # noqa: BLE001
            pass
    checks = {
        "1000 wire roundtrips": wire_ok == 1000,
        "100 clip roundtrips": clip_ok == 100,
        "wrong joint count": joint_ok,
        "out-of-range confidence": range_ok,
        "truncated line": trunc_ok,
        "3000 mutated lines classified": total == 3000,
    }
    finish(8, checks, f"wire {wire_ok}/1000, clips {clip_ok}/100, mutated lines classified {total}/3000")


# 9 -----------------------------------------------------------------------------------


def test_criterion_9_matrix_invariants(default_bundle):
    rng = np.random.default_rng(9)
    worst_row = worst_acc = 0.0
    matrices = []
    for _ in range(500):
        n = int(rng.integers(1, 400))
        truth = [SIX_GESTURES[i] for i in rng.integers(0, 6, size=n)]
        pred = [GestureLabel(int(i)) for i in rng.integers(0, 11, size=n)]
        matrices.append(confusion_matrix(truth, pred))
    matrices.append(run_pilot(default_bundle, PilotConfig(seed=42)).matrix)
    matrices.append(run_pilot(default_bundle, PilotConfig(seed=1, synth=SynthParams(noise_sigma=0.04))).matrix)
    for m in matrices:
        nonempty = m.counts.sum(axis=1) > 0
        worst_row = max(worst_row, float(np.max(np.abs(m.percentages.sum(axis=1)[nonempty] - 100.0))))
        trace = sum(int(m.counts[i, m.cols.index(g)]) for i, g in enumerate(m.rows))
        worst_acc = max(worst_acc, abs(m.accuracy - trace / m.total))
    checks = {"rows sum to 100 +- 0.1": worst_row <= 0.1, "accuracy = trace ratio within 1e-9": worst_acc <= 1e-9}
    finish(9, checks, f"{len(matrices)} matrices; max row deviation {worst_row:.2e}, max accuracy deviation {worst_acc:.2e}")
