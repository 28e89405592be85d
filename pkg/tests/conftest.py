import csv
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture
def record_criterion():
    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        _CRITERIA[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])


@pytest.fixture(scope="session")
def benchmark_run(tmp_path_factory):
    """Train both regimes on the committed benchmark and evaluate them via the CLI.

    Returns ``(output_dir, eval_rows_by_regime, seconds)``.
    """
    from difflsq.cli import main

    from .helpers import config_path

    out = tmp_path_factory.mktemp("benchmark")
    cfg = config_path("benchmark.ini")
    start = time.perf_counter()
    assert main(["train", cfg, "--regime", "both", "--out", str(out)]) == 0
    assert main(["eval", cfg, "--out", str(out), "--report", str(out / "eval.csv")]) == 0
    with open(out / "eval.csv") as fh:
        rows = {r["regime"]: r for r in csv.DictReader(fh)}
    return out, rows, time.perf_counter() - start
