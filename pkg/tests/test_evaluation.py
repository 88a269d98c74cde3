from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socialgesture.evaluation import (
    PilotConfig,
    confusion_matrix,
    parse_report_csv,
    report,
    run_pilot,
)
from socialgesture.skeleton import SIX_GESTURES, GestureLabel, SynthParams

G = GestureLabel


def test_hand_counted_matrix():
    m = confusion_matrix([G.R5, G.R5, G.RH], [G.R5, G.RH, G.RH])
    assert m.rows == (G.R5, G.RH) and m.cols == (G.R5, G.RH, G.NONE)
    assert m.percentages.tolist() == [[50.0, 50.0, 0.0], [0.0, 100.0, 0.0]]
    assert m.accuracy == pytest.approx(2 / 3, abs=1e-15)


def test_perfect_and_rejecting_predictions():
    truth = [G.R5, G.L5, G.RS, G.RS]
    m = confusion_matrix(truth, truth)
    assert m.accuracy == 1.0
    assert np.array_equal(m.percentages[:, :-1], 100.0 * np.eye(3))
    m = confusion_matrix(truth, [G.NONE] * 4)
    assert m.accuracy == 0.0
    assert np.all(m.percentages[:, -1] == 100.0)


def test_off_set_predictions_get_their_own_columns():
    m = confusion_matrix([G.R5, G.R5], [G.RM, G.NONE], labels=[G.R5, G.L5])
    assert m.cols == (G.R5, G.L5, G.RM, G.NONE)
    assert m.counts.tolist() == [[0, 0, 1, 1], [0, 0, 0, 0]]
    assert m.percentages[1].tolist() == [0, 0, 0, 0]


def test_matrix_errors():
    with pytest.raises(ValueError, match="length"):
        confusion_matrix([G.R5], [G.R5, G.L5])
    with pytest.raises(ValueError, match="empty"):
        confusion_matrix([], [])
    with pytest.raises(ValueError, match="outside"):
        confusion_matrix([G.LH], [G.LH], labels=[G.R5])


_labels = st.sampled_from(list(SIX_GESTURES))
_preds = st.sampled_from(list(G))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(_labels, _preds), min_size=1, max_size=300))
def test_matrix_invariants(pairs):
    truth, pred = zip(*pairs)
    m = confusion_matrix(truth, pred)
    totals = m.counts.sum(axis=1)
    sums = m.percentages.sum(axis=1)
    assert np.all(np.abs(sums[totals > 0] - 100.0) <= 0.1)
    trace = sum(int(m.counts[i, m.cols.index(g)]) for i, g in enumerate(m.rows))
    assert abs(m.accuracy - trace / m.total) <= 1e-9
    assert m.accuracy == sum(t == p for t, p in pairs) / len(pairs)
    assert m.total == len(pairs)


def test_text_render_of_hand_example(small_bundle):
    r = run_pilot(small_bundle, PilotConfig(participants=1, prompts_range=(3, 3), seed=1))
    r.matrix = confusion_matrix([G.R5, G.R5, G.RH], [G.R5, G.RH, G.RH])
    text = report(r, "text").decode()
    assert "50.0" in text and "100.0" in text
    assert "overall accuracy: 66.7% (2/3)" in text
    with pytest.raises(ValueError, match="format"):
        report(r, "xml")


@pytest.fixture(scope="module")
def small_pilot(small_bundle):
    return run_pilot(small_bundle, PilotConfig(participants=4, seed=3))


def test_pilot_structure(small_pilot):
    r = small_pilot
    assert len(r.participants) == 4
    assert all(27 <= p.prompts <= 30 for p in r.participants)
    assert set(r.matrix.rows) == set(SIX_GESTURES)
    prompts = [t.prompt for t in r.trials]
    assert set(prompts) <= set(SIX_GESTURES) | {G.RM, G.LM}
    assert r.mat_matrix is not None and r.mat_matrix.total == 4 * 6
    assert r.rm_rate is not None and r.lm_rate is not None


def test_accuracy_is_count_weighted_participant_mean(small_pilot):
    r = small_pilot
    weighted = sum(p.accuracy * p.prompts for p in r.participants) / sum(p.prompts for p in r.participants)
    assert abs(r.overall_accuracy - weighted) <= 1e-9


def test_csv_roundtrip(small_pilot):
    data = report(small_pilot, "csv")
    parsed = parse_report_csv(data)
    m = small_pilot.matrix
    assert parsed.cols == [c.name for c in m.cols]
    assert parsed.counts == {g.name: m.counts[i].tolist() for i, g in enumerate(m.rows)}
    for i, g in enumerate(m.rows):
        assert np.allclose(parsed.percentages[g.name], m.percentages[i], atol=1e-6)
        assert abs(sum(parsed.percentages[g.name]) - 100.0) <= 0.1
    assert parsed.overall_accuracy == pytest.approx(small_pilot.overall_accuracy, abs=1e-6)
    assert parsed.seed == 3


def test_mat_block_skipped(small_bundle):
    r = run_pilot(small_bundle, PilotConfig(participants=1, seed=0, mat_prompts_each=0))
    assert r.mat_matrix is None and r.rm_rate is None
    assert "hand-on-mat block: skipped" in report(r).decode()
    parsed = parse_report_csv(report(r, "csv"))
    assert parsed.rm_rate is None and parsed.lm_rate is None


def test_pilot_deterministic(small_bundle):
    cfg = PilotConfig(participants=2, seed=9)
    assert report(run_pilot(small_bundle, cfg)) == report(run_pilot(small_bundle, cfg))
    assert report(run_pilot(small_bundle, cfg), "csv") == report(run_pilot(small_bundle, cfg), "csv")


@pytest.mark.parametrize("seed", [0, 7, 123456789])
def test_prompt_counts_in_range_for_any_seed(small_bundle, seed):
    r = run_pilot(small_bundle, PilotConfig(participants=2, seed=seed, mat_prompts_each=0))
    assert all(27 <= p.prompts <= 30 for p in r.participants)


def test_noiseless_pilot_is_perfect(default_bundle):
    r = run_pilot(default_bundle, PilotConfig(participants=5, seed=4, synth=SynthParams(noise_sigma=0.0)))
    assert r.overall_accuracy == 1.0


def test_feature_version_mismatch(small_bundle):
    from dataclasses import replace

    with pytest.raises(ValueError, match="feature spec"):
        run_pilot(replace(small_bundle, feature_spec_version=99), PilotConfig(participants=1))


def test_pilot_config_validation():
    with pytest.raises(ValueError):
        PilotConfig(participants=0)
    with pytest.raises(ValueError):
        PilotConfig(prompts_range=(30, 27))
    with pytest.raises(ValueError):
        PilotConfig(prompt_set=())
