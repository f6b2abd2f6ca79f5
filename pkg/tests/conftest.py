"""Shared Monte Carlo runs.

The size and power simulations are expensive, so each configuration is
run once per session and reused by every test that needs it.
"""

from functools import lru_cache

import pytest

from rank_rmt.harness import ExperimentConfig, run_experiment
from rank_rmt.independence import ANALYTIC_TESTS, TestId
from rank_rmt.models import AltKind, AltModel, NullModel

SIZE_REPS = 1000
POWER_REPS = 500
SEED = 20240601


@lru_cache(maxsize=None)
def _cached_run(cfg):
    return run_experiment(cfg)


def size_run(n, p, null="normal", reps=SIZE_REPS, seed=SEED):
    return _cached_run(ExperimentConfig(n, p, NullModel(null), ANALYTIC_TESTS, reps, 0.05, seed))


def power_run(kind, rho, tests, reps=POWER_REPS, seed=SEED, mc_reps=500):
    model = AltModel(AltKind(kind), rho, NullModel.NORMAL)
    return _cached_run(ExperimentConfig(200, 100, model, tuple(TestId(t) for t in tests), reps, 0.05, seed, mc_reps=mc_reps))


@pytest.fixture(scope="session")
def sizes():
    return size_run


@pytest.fixture(scope="session")
def powers():
    return power_run


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""
    log = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number, checks):
        failed = [name for name, ok in checks if not ok]
        detail = "; ".join(name for name, _ in checks) if not failed else "failed: " + "; ".join(failed)
        line = f"{'PASS' if not failed else 'FAIL'} criterion {number}: {detail}"
        log[number] = line
        print(line)
        assert not failed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE_KEY, {})
    if log:
        terminalreporter.section("acceptance criteria")
        for number in sorted(log):
            terminalreporter.write_line(log[number])
