import time

import numpy as np
import pytest

from lossyqsim import harness
from lossyqsim.analysis import reference_trace
from lossyqsim.circuits import build_benchmark, initial_state

# acceptance outcomes, filled in by test_acceptance.py and echoed at the end of the run
CRITERIA: dict = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    CRITERIA[number] = (title, bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, ok, detail = CRITERIA[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bench():
    """The default benchmark: circuit, psi0 and its float64 trajectory."""
    spec = build_benchmark(6, 31)
    psi0 = initial_state(6, harness.DEFAULT_INIT)
    return spec, psi0, reference_trace(spec, psi0)


@pytest.fixture(scope="session")
def vq_run(tmp_path_factory):
    """Full default VQ sweep, over m = 2..15 so the fits have enough widths."""
    out = tmp_path_factory.mktemp("vq")
    cfg = harness.ExperimentConfig(
        precisions=harness.VQ_PRECISIONS,
        codebook_bits=tuple(range(2, 16)),
        out=str(out),
    )
    results = {}

    def keep(m, seed, cb, runs):
        results[m, seed] = (cb, {p: f for p, ((f, _), _) in runs.items()})

    t0 = time.perf_counter()
    csv_path = harness.cmd_vq(cfg, observe=keep)
    elapsed = time.perf_counter() - t0
    return cfg, csv_path, results, elapsed


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
