"""Independence tests of ``H0: R = I`` from rank correlation matrices.

Four tests have analytic normal calibration with the finite-sample ratio
``y_n = p/n``:

=========  =========================================  =========  ===================================
test       centred statistic                           tail       mean, sd
=========  =========================================  =========  ===================================
rho_l2     tr(rho^2) - p^2/n - p                       upper      y^2 - y, 2y
rho_log    log|rho| + (n - p) log(1 - y) + p           lower      1.5 log(1-y) + 2y, sigma_log
irho_l2    tr(irho^2) - p^2/n - p                      upper      3y^2 - y, 2y
irho_log   log|irho| + (n - p) log(1 - y) + p          lower      mu_log - y^2/(1-y), sigma_log
=========  =========================================  =========  ===================================

with ``sigma_log^2 = -2 log(1 - y) - 2y``. The remaining statistics (max
entries, Kendall and Pearson analogues) have no analytic thresholds here and
are calibrated by simulation under a null model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
from scipy import stats

from .corr_matrices import improved_spearman_from_ranks, kendall_from_ranks, pearson, spearman_from_ranks
from .errors import DomainError, SampleTooSmall
from .models import NullModel, gen_null
from .mp_theory import Variant, clt_closed_form
from .rank_core import TiePolicy, as_data_matrix, rank_columns
from .spectral import logdet

__all__ = [
    "TestId",
    "Tail",
    "TestReport",
    "ANALYTIC_TESTS",
    "test_tail",
    "null_moments",
    "StatisticCache",
    "statistic_only",
    "compute_statistics",
    "analytic_report",
    "mc_report",
    "test_rho_l2",
    "test_rho_log",
    "test_irho_l2",
    "test_irho_log",
    "run_tests",
    "mc_null_statistics",
    "mc_calibrate",
    "mc_calibrate_many",
]


class TestId(str, enum.Enum):
    __test__ = False

    RHO_L2 = "rho_l2"
    RHO_LOG = "rho_log"
    IRHO_L2 = "irho_l2"
    IRHO_LOG = "irho_log"
    RHO_MAX = "rho_max"
    IRHO_MAX = "irho_max"
    K_L2 = "k_l2"
    K_LOG = "k_log"
    K_MAX = "k_max"
    R_L2 = "r_l2"
    R_LOG = "r_log"
    R_MAX = "r_max"


class Tail(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


ANALYTIC_TESTS = (TestId.RHO_L2, TestId.RHO_LOG, TestId.IRHO_L2, TestId.IRHO_LOG)


def test_tail(test_id: TestId | str) -> Tail:
    """Rejection side: log-determinants reject small values, the rest large ones."""
    return Tail.LOWER if TestId(test_id).value.endswith("_log") else Tail.UPPER


test_tail.__test__ = False


def _is_log(tid: TestId) -> bool:
    return tid.value.endswith("_log")


@dataclass(frozen=True)
class TestReport:
    """Outcome of one test on one data set.

    ``z_score`` and ``p_value`` are only set for analytic calibration. For
    Monte Carlo calibration ``critical_value`` holds the simulated quantile.
    """

    __test__ = False

    test_id: TestId
    statistic: float
    centered: float
    z_score: float | None
    p_value: float | None
    reject: bool
    alpha: float
    n: int
    p: int
    calibration: str
    critical_value: float | None = None
    mc_reps: int | None = None
    mc_seed: int | None = None

    @property
    def y_n(self) -> float:
        return self.p / self.n

    def to_dict(self) -> dict:
        d = asdict(self)
        d["test_id"] = self.test_id.value
        d["y_n"] = self.y_n
        return d


# ---------------------------------------------------------------------------
# Statistics


def _offdiag_absmax(m: np.ndarray) -> float:
    iu = np.triu_indices(m.shape[0], 1)
    return float(np.max(np.abs(m[iu]))) if iu[0].size else 0.0


class StatisticCache:
    """Builds each correlation matrix of one data set at most once.

    Parameters
    ----------
    data : array, optional
        Raw ``n x p`` data. Needed for the Pearson statistics.
    ranks : array, optional
        Column ranks; computed from ``data`` when omitted.
    """

    def __init__(self, data=None, ranks=None, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None):
        if data is None and ranks is None:
            raise ValueError("need data or ranks")
        self.data = None if data is None else as_data_matrix(data)
        self.ranks = rank_columns(self.data, tie_policy, seed) if ranks is None else np.asarray(ranks)
        self.n, self.p = self.ranks.shape

    @cached_property
    def rho(self) -> np.ndarray:
        return spearman_from_ranks(self.ranks)

    @cached_property
    def kendall(self) -> np.ndarray:
        return kendall_from_ranks(self.ranks)

    @cached_property
    def irho(self) -> np.ndarray:
        return improved_spearman_from_ranks(self.ranks, self.kendall, self.rho)

    @cached_property
    def pearson(self) -> np.ndarray:
        if self.data is None:
            raise DomainError("Pearson statistics need the raw data, not only ranks")
        return pearson(self.data)

    def matrix(self, tid: TestId) -> np.ndarray:
        prefix = tid.value.split("_")[0]
        return {"rho": lambda: self.rho, "irho": lambda: self.irho, "k": lambda: self.kendall, "r": lambda: self.pearson}[prefix]()

    def statistic(self, test_id: TestId | str) -> float:
        tid = TestId(test_id)
        if self.n < 3:
            raise SampleTooSmall("the tests need n >= 3")
        if _is_log(tid) and self.p >= self.n:
            raise DomainError(f"log-determinant statistics need p < n (y_n = p/n < 1); got n={self.n}, p={self.p}")
        m = self.matrix(tid)
        if tid.value.endswith("_l2"):
            return float(np.sum(m * m))
        if _is_log(tid):
            return logdet(m)
        return _offdiag_absmax(m)


def statistic_only(data, test_id: TestId | str, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> float:
    """Raw value of one statistic, without calibration.

    ``*_l2`` is ``tr(M^2)``, ``*_log`` is ``log|M|`` and ``*_max`` is the
    largest absolute off-diagonal entry, for ``M`` the Spearman (``rho``),
    improved Spearman (``irho``), Kendall (``k``) or Pearson (``r``) matrix.
    """
    return StatisticCache(data, tie_policy=tie_policy, seed=seed).statistic(test_id)


def compute_statistics(cache: StatisticCache, test_ids) -> dict[TestId, float | Exception]:
    """Every requested statistic; domain errors are returned in place of values."""
    out: dict[TestId, float | Exception] = {}
    for t in test_ids:
        tid = TestId(t)
        try:
            out[tid] = cache.statistic(tid)
        except DomainError as exc:
            out[tid] = exc
    return out


# ---------------------------------------------------------------------------
# Analytic calibration


def null_moments(test_id: TestId | str, n: int, p: int) -> tuple[float, float]:
    """Limiting null mean and standard deviation of the centred statistic at ``y_n``."""
    tid = TestId(test_id)
    if tid not in ANALYTIC_TESTS:
        raise DomainError(f"{tid.value} has no analytic calibration")
    y = p / n
    variant = Variant.IMPROVED if tid.value.startswith("irho") else Variant.CLASSICAL
    if _is_log(tid):
        if y >= 1:
            raise DomainError(f"log-determinant tests need y_n = p/n < 1; got y_n={y:g}")
        m = clt_closed_form("log", y, variant)
    else:
        m = clt_closed_form("power", y, variant, k=2)
    return m.mean, m.sd


def _centre(tid: TestId, stat: float, n: int, p: int) -> float:
    y = p / n
    if _is_log(tid):
        return stat + (n - p) * math.log1p(-y) + p
    return stat - p * p / n - p


def analytic_report(test_id: TestId | str, statistic: float, n: int, p: int, alpha: float = 0.05) -> TestReport:
    """Calibrate a statistic with its limiting normal law."""
    tid = TestId(test_id)
    mean, sd = null_moments(tid, n, p)
    centered = _centre(tid, statistic, n, p)
    z = (centered - mean) / sd
    pval = float(stats.norm.sf(z)) if test_tail(tid) is Tail.UPPER else float(stats.norm.cdf(z))
    return TestReport(tid, float(statistic), centered, z, pval, pval < alpha, alpha, n, p, "analytic")


def mc_report(
    test_id: TestId | str,
    statistic: float,
    critical_value: float,
    n: int,
    p: int,
    alpha: float = 0.05,
    mc_reps: int | None = None,
    mc_seed: int | None = None,
) -> TestReport:
    """Decision against a simulated critical value."""
    tid = TestId(test_id)
    if test_tail(tid) is Tail.UPPER:
        reject = statistic > critical_value
    else:
        reject = statistic < critical_value
    return TestReport(
        tid, float(statistic), float(statistic - critical_value), None, None, bool(reject), alpha, n, p,
        "monte_carlo", float(critical_value), mc_reps, mc_seed,
    )


def _analytic(tid, data, alpha, tie_policy, seed):
    cache = StatisticCache(data, tie_policy=tie_policy, seed=seed)
    return analytic_report(tid, cache.statistic(tid), cache.n, cache.p, alpha)


def test_rho_l2(data, alpha: float = 0.05, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> TestReport:
    """``tr(rho^2)`` test, rejecting for large values."""
    return _analytic(TestId.RHO_L2, data, alpha, tie_policy, seed)


def test_rho_log(data, alpha: float = 0.05, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> TestReport:
    """``log|rho|`` test, rejecting for small values; needs ``p < n``."""
    return _analytic(TestId.RHO_LOG, data, alpha, tie_policy, seed)


def test_irho_l2(data, alpha: float = 0.05, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> TestReport:
    """``tr(irho^2)`` test on the improved Spearman matrix, rejecting for large values."""
    return _analytic(TestId.IRHO_L2, data, alpha, tie_policy, seed)


def test_irho_log(data, alpha: float = 0.05, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> TestReport:
    """``log|irho|`` test on the improved Spearman matrix, rejecting for small values."""
    return _analytic(TestId.IRHO_LOG, data, alpha, tie_policy, seed)


for _f in (test_rho_l2, test_rho_log, test_irho_l2, test_irho_log):
    _f.__test__ = False


# ---------------------------------------------------------------------------
# Monte Carlo calibration


def mc_null_statistics(test_ids, n: int, p: int, null_model: NullModel | str = NullModel.NORMAL, reps: int = 500, seed: int = 0) -> dict[TestId, np.ndarray]:
    """Simulate the requested statistics under a null model.

    Replication ``r`` draws from ``SeedSequence(seed, spawn_key=(r,))``, so
    any replication can be reproduced on its own.
    """
    tids = [TestId(t) for t in test_ids]
    out = {t: np.empty(reps) for t in tids}
    for r in range(reps):
        x = gen_null(null_model, n, p, np.random.SeedSequence(seed, spawn_key=(r,)))
        cache = StatisticCache(x)
        for t in tids:
            out[t][r] = cache.statistic(t)
    return out


def _quantile(values: np.ndarray, tid: TestId, alpha: float) -> float:
    if test_tail(tid) is Tail.UPPER:
        return float(np.quantile(values, 1.0 - alpha, method="higher"))
    return float(np.quantile(values, alpha, method="lower"))


def mc_calibrate_many(test_ids, n: int, p: int, null_model: NullModel | str = NullModel.NORMAL, reps: int = 500, seed: int = 0, alpha: float = 0.05) -> dict[TestId, float]:
    """Simulated critical values for several statistics from one set of null draws."""
    if reps < 200:
        raise DomainError("Monte Carlo calibration needs reps >= 200")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    sims = mc_null_statistics(test_ids, n, p, null_model, reps, seed)
    return {t: _quantile(v, t, alpha) for t, v in sims.items()}


def mc_calibrate(test_id: TestId | str, n: int, p: int, null_model: NullModel | str = NullModel.NORMAL, reps: int = 500, seed: int = 0, alpha: float = 0.05) -> float:
    """Empirical ``1 - alpha`` quantile (``alpha`` quantile for log tests) under the null."""
    tid = TestId(test_id)
    return mc_calibrate_many([tid], n, p, null_model, reps, seed, alpha)[tid]


# ---------------------------------------------------------------------------


def run_tests(
    data,
    test_ids=ANALYTIC_TESTS,
    alpha: float = 0.05,
    tie_policy: TiePolicy | str = TiePolicy.STRICT,
    seed=None,
    critical_values: dict | None = None,
    mc_reps: int | None = None,
    mc_seed: int | None = None,
) -> list[TestReport]:
    """Run several tests on one data set, sharing the matrix constructions.

    Non-analytic tests need an entry in ``critical_values`` (see
    :func:`mc_calibrate_many`). Domain errors propagate.
    """
    cache = StatisticCache(data, tie_policy=tie_policy, seed=seed)
    reports = []
    for t in test_ids:
        tid = TestId(t)
        stat = cache.statistic(tid)
        if tid in ANALYTIC_TESTS:
            reports.append(analytic_report(tid, stat, cache.n, cache.p, alpha))
        else:
            if not critical_values or tid not in critical_values:
                raise DomainError(f"{tid.value} needs a Monte Carlo critical value")
            reports.append(mc_report(tid, stat, critical_values[tid], cache.n, cache.p, alpha, mc_reps, mc_seed))
    return reports
