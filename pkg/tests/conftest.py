from __future__ import annotations

import io
import time
import pytest

from socialgesture.classifier import ModelBundle, TrainConfig, load_bundle, train_bundle
from socialgesture.cli import run_cli
from socialgesture.skeleton import synth_cohort

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (passed, detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 10):
        # a criterion whose test crashed before recording is reported, not skipped silently
        passed, detail = ACCEPTANCE.get(n, (False, "no result recorded (test errored or was not selected)"))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'} - {detail}")


def cli(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), stdin=io.StringIO(), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory) -> dict:
    """`gen --cohort train-default --seed 1` then `train --rounds 50 --seed 1`, through the CLI."""
    root = tmp_path_factory.mktemp("pipeline")
    start = time.perf_counter()
    corpus, model = root / "corpus", root / "m.json"
    code, _, err = cli("gen", "--cohort", "train-default", "--seed", "1", "--out", str(corpus))
    assert code == 0, err
    code, _, err = cli("train", "--corpus", str(corpus), "--rounds", "50", "--seed", "1", "--out", str(model))
    assert code == 0, err
    return {"root": root, "corpus": corpus, "model": model, "seconds": time.perf_counter() - start}


@pytest.fixture(scope="session")
def default_bundle(pipeline) -> ModelBundle:
    return load_bundle(pipeline["model"].read_bytes())


@pytest.fixture(scope="session")
def small_corpus():
    return [clip for _, clip in synth_cohort("train-small", 5)]


@pytest.fixture(scope="session")
def small_bundle(small_corpus) -> ModelBundle:
    return train_bundle(small_corpus, config=TrainConfig(rounds=15, seed=5))
