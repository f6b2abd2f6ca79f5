"""Replication engine for empirical size and power tables.

Replication ``r`` of an experiment draws its data from
``SeedSequence(master_seed, spawn_key=(r,))``; Monte Carlo critical values
come from a separate stream keyed ``(MC_KEY,)``. Results therefore do not
depend on how replications are scheduled across threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, ParseError, SingularMatrixError
from .independence import (
    ANALYTIC_TESTS,
    StatisticCache,
    TestId,
    analytic_report,
    mc_calibrate_many,
    mc_report,
)
from .models import AltKind, AltModel, NullModel, generate

__all__ = [
    "ExperimentConfig",
    "TestSummary",
    "ExperimentResult",
    "run_experiment",
    "replication_seed",
    "calibration_seed",
    "CSV_COLUMNS",
    "RESULT_SCHEMA",
    "result_rows",
    "write_csv",
    "read_csv",
    "write_json",
    "read_json",
    "config_from_dict",
    "config_to_dict",
    "preset",
    "PRESETS",
    "RANK_TESTS",
]

MC_KEY = 2**31
RANK_TESTS = (
    TestId.RHO_L2,
    TestId.RHO_LOG,
    TestId.RHO_MAX,
    TestId.IRHO_L2,
    TestId.IRHO_LOG,
    TestId.IRHO_MAX,
    TestId.K_L2,
    TestId.K_LOG,
    TestId.K_MAX,
)
ALL_TESTS = RANK_TESTS + (TestId.R_L2, TestId.R_LOG, TestId.R_MAX)


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of a size or power table."""

    n: int
    p: int
    model: NullModel | AltModel = NullModel.NORMAL
    tests: tuple[TestId, ...] = ANALYTIC_TESTS
    reps: int = 1000
    alpha: float = 0.05
    master_seed: int = 0
    parallelism: int = 1
    mc_reps: int = 500
    experiment_id: str = ""

    def __post_init__(self):
        model = self.model if isinstance(self.model, AltModel) else NullModel(self.model)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "tests", tuple(TestId(t) for t in self.tests))
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if self.n < 3 or self.p < 1:
            raise DomainError("need n >= 3 and p >= 1")
        if not self.experiment_id:
            object.__setattr__(self, "experiment_id", f"{model_label(model)}-n{self.n}-p{self.p}" + (f"-rho{model.rho:g}" if isinstance(model, AltModel) else ""))

    @property
    def mc_tests(self) -> tuple[TestId, ...]:
        return tuple(t for t in self.tests if t not in ANALYTIC_TESTS)


@dataclass(frozen=True)
class TestSummary:
    """Aggregate for one test; ``applicable`` is false when the statistic is undefined."""

    __test__ = False

    test_id: TestId
    applicable: bool
    reject_count: int | None
    reject_rate: float | None
    stat_mean: float | None
    stat_sd: float | None


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    summaries: tuple[TestSummary, ...]
    seconds: float = field(default=0.0, compare=False)
    # per-replication arrays keyed by test id: statistic, reject, p_value
    per_rep: dict = field(default_factory=dict, compare=False, repr=False)

    def summary(self, test_id) -> TestSummary:
        tid = TestId(test_id)
        for s in self.summaries:
            if s.test_id is tid:
                return s
        raise KeyError(tid)

    def rate(self, test_id) -> float | None:
        return self.summary(test_id).reject_rate


def model_label(model) -> str:
    if isinstance(model, AltModel):
        return f"{model.kind.value}:{model.base.value}" + (":sqrt" if model.sqrt_sigma else "")
    return NullModel(model).value


def parse_model(label: str, rho=None):
    parts = label.split(":")
    if len(parts) == 1:
        return NullModel(parts[0])
    if rho is None:
        raise ParseError(f"alternative model {label!r} needs rho")
    return AltModel(AltKind(parts[0]), float(rho), NullModel(parts[1]), len(parts) > 2 and parts[2] == "sqrt")


def replication_seed(master_seed: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(r,))


def calibration_seed(master_seed: int) -> int:
    return int(np.random.SeedSequence(master_seed, spawn_key=(MC_KEY,)).generate_state(1, np.uint64)[0])


@lru_cache(maxsize=64)
def _critical_values(tests: tuple, n: int, p: int, reps: int, seed: int, alpha: float) -> tuple:
    vals = mc_calibrate_many(tests, n, p, NullModel.NORMAL, reps, seed, alpha)
    return tuple(vals[t] for t in tests)


def _one_rep(cfg: ExperimentConfig, r: int, crit: dict):
    x = generate(cfg.model, cfg.n, cfg.p, replication_seed(cfg.master_seed, r))
    cache = StatisticCache(x)
    out = {}
    for tid in cfg.tests:
        try:
            stat = cache.statistic(tid)
        except SingularMatrixError:
            # log|M| -> -inf lies in the lower rejection region
            out[tid] = (-math.inf, True, 0.0 if tid in ANALYTIC_TESTS else None)
            continue
        except DomainError:
            out[tid] = None
            continue
        if tid in ANALYTIC_TESTS:
            rep = analytic_report(tid, stat, cfg.n, cfg.p, cfg.alpha)
        else:
            rep = mc_report(tid, stat, crit[tid], cfg.n, cfg.p, cfg.alpha)
        out[tid] = (stat, rep.reject, rep.p_value)
    return out


def run_experiment(cfg: ExperimentConfig, parallelism: int | None = None) -> ExperimentResult:
    """Run every replication of ``cfg`` and aggregate rejection rates.

    Statistics that are undefined for the configuration (log-determinants
    with ``p >= n``) are reported as not applicable.
    """
    t0 = time.perf_counter()
    workers = max(1, int(parallelism or cfg.parallelism))
    crit = {}
    mc = tuple(t for t in cfg.mc_tests if not (t.value.endswith("_log") and cfg.p >= cfg.n))
    if mc:
        vals = _critical_values(mc, cfg.n, cfg.p, cfg.mc_reps, calibration_seed(cfg.master_seed), cfg.alpha)
        crit = dict(zip(mc, vals))

    if workers == 1:
        rows = [_one_rep(cfg, r, crit) for r in range(cfg.reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: _one_rep(cfg, r, crit), range(cfg.reps)))

    summaries, per_rep = [], {}
    for tid in cfg.tests:
        vals = [row[tid] for row in rows]
        if any(v is None for v in vals):
            summaries.append(TestSummary(tid, False, None, None, None, None))
            continue
        stat = np.array([v[0] for v in vals], dtype=float)
        rej = np.array([v[1] for v in vals], dtype=bool)
        pv = np.array([np.nan if v[2] is None else v[2] for v in vals], dtype=float)
        finite = stat[np.isfinite(stat)]
        count = int(rej.sum())
        summaries.append(
            TestSummary(
                tid,
                True,
                count,
                count / cfg.reps,
                float(finite.mean()) if finite.size else None,
                float(finite.std(ddof=1)) if finite.size > 1 else None,
            )
        )
        per_rep[tid] = {"statistic": stat, "reject": rej, "p_value": pv}
    return ExperimentResult(cfg, tuple(summaries), time.perf_counter() - t0, per_rep)


# ---------------------------------------------------------------------------
# Serialization

CSV_COLUMNS = (
    "experiment_id",
    "n",
    "p",
    "model",
    "rho",
    "test_id",
    "reps",
    "alpha",
    "reject_rate",
    "stat_mean",
    "stat_sd",
    "seconds",
)

_NUM = {"type": ["number", "null"]}
RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "rank_rmt experiment results",
    "type": "array",
    "items": {
        "type": "object",
        "required": ["experiment_id", "config", "seconds", "tests"],
        "properties": {
            "experiment_id": {"type": "string"},
            "seconds": {"type": "number", "minimum": 0},
            "config": {
                "type": "object",
                "required": ["n", "p", "model", "rho", "tests", "reps", "alpha", "master_seed", "parallelism", "mc_reps"],
                "properties": {
                    "n": {"type": "integer", "minimum": 3},
                    "p": {"type": "integer", "minimum": 1},
                    "model": {"type": "string"},
                    "rho": _NUM,
                    "tests": {"type": "array", "items": {"type": "string", "enum": [t.value for t in TestId]}},
                    "reps": {"type": "integer", "minimum": 1},
                    "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    "master_seed": {"type": "integer"},
                    "parallelism": {"type": "integer", "minimum": 1},
                    "mc_reps": {"type": "integer", "minimum": 1},
                },
            },
            "tests": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["test_id", "applicable", "reject_count", "reject_rate", "stat_mean", "stat_sd"],
                    "properties": {
                        "test_id": {"type": "string", "enum": [t.value for t in TestId]},
                        "applicable": {"type": "boolean"},
                        "reject_count": {"type": ["integer", "null"], "minimum": 0},
                        "reject_rate": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                        "stat_mean": _NUM,
                        "stat_sd": _NUM,
                    },
                },
            },
        },
    },
}


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "n": cfg.n,
        "p": cfg.p,
        "model": model_label(cfg.model),
        "rho": cfg.model.rho if isinstance(cfg.model, AltModel) else None,
        "tests": [t.value for t in cfg.tests],
        "reps": cfg.reps,
        "alpha": cfg.alpha,
        "master_seed": cfg.master_seed,
        "parallelism": cfg.parallelism,
        "mc_reps": cfg.mc_reps,
        "experiment_id": cfg.experiment_id,
    }


def config_from_dict(d: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            n=int(d["n"]),
            p=int(d["p"]),
            model=parse_model(d.get("model", "normal"), d.get("rho")),
            tests=tuple(d.get("tests", [t.value for t in ANALYTIC_TESTS])),
            reps=int(d.get("reps", 1000)),
            alpha=float(d.get("alpha", 0.05)),
            master_seed=int(d.get("master_seed", 0)),
            parallelism=int(d.get("parallelism", 1)),
            mc_reps=int(d.get("mc_reps", 500)),
            experiment_id=d.get("experiment_id", ""),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"bad experiment config {d!r}: {exc}") from exc


def _result_to_dict(res: ExperimentResult) -> dict:
    return {
        "experiment_id": res.config.experiment_id,
        "config": config_to_dict(res.config),
        "seconds": res.seconds,
        "tests": [
            {
                "test_id": s.test_id.value,
                "applicable": s.applicable,
                "reject_count": s.reject_count,
                "reject_rate": s.reject_rate,
                "stat_mean": s.stat_mean,
                "stat_sd": s.stat_sd,
            }
            for s in res.summaries
        ],
    }


def _result_from_dict(d: dict) -> ExperimentResult:
    cfg = config_from_dict(d["config"])
    summaries = tuple(
        TestSummary(TestId(t["test_id"]), t["applicable"], t["reject_count"], t["reject_rate"], t["stat_mean"], t["stat_sd"])
        for t in d["tests"]
    )
    return ExperimentResult(cfg, summaries, float(d["seconds"]))


def write_json(results, fh=None) -> str:
    """Serialize results (config order preserved); returns the text and writes it to ``fh`` if given."""
    text = json.dumps([_result_to_dict(r) for r in results], indent=2)
    if fh is not None:
        fh.write(text)
    return text


def read_json(text: str) -> list[ExperimentResult]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return [_result_from_dict(d) for d in data]


def _fmt(v) -> str:
    if v is None:
        return "NA"
    return repr(float(v)) if isinstance(v, float) else str(v)


def result_rows(results) -> list[dict]:
    """One flat row per (experiment, test) pair, with ``NA`` for undefined values."""
    rows = []
    for res in results:
        cfg = res.config
        rho = cfg.model.rho if isinstance(cfg.model, AltModel) else None
        for s in res.summaries:
            rows.append(
                {
                    "experiment_id": cfg.experiment_id,
                    "n": str(cfg.n),
                    "p": str(cfg.p),
                    "model": model_label(cfg.model),
                    "rho": _fmt(rho),
                    "test_id": s.test_id.value,
                    "reps": str(cfg.reps),
                    "alpha": _fmt(cfg.alpha),
                    "reject_rate": _fmt(s.reject_rate),
                    "stat_mean": _fmt(s.stat_mean),
                    "stat_sd": _fmt(s.stat_sd),
                    "seconds": _fmt(res.seconds),
                }
            )
    return rows


def write_csv(results, fh=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(result_rows(results))
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_csv(text: str) -> list[dict]:
    """Parse a results CSV back into the rows produced by :func:`result_rows`."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ParseError(f"unexpected CSV header {reader.fieldnames}")
    return [dict(row) for row in reader]


# ---------------------------------------------------------------------------
# Presets reproducing the published grids

TABLE2_GRID = ((100, 50), (200, 100), (400, 200), (100, 70), (200, 140), (400, 280), (100, 200), (200, 400), (400, 800))
TABLE3_RHOS = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08)
TABLE4_RHOS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
NULLS = (NullModel.NORMAL, NullModel.CAUCHY, NullModel.MIXED)


def preset(name: str, reps: int | None = None, master_seed: int = 0, parallelism: int = 1, mc_reps: int = 500) -> list[ExperimentConfig]:
    """Configurations for ``table2`` (sizes), ``table3`` (global) or ``table4`` (local power)."""
    if name == "table2":
        return [
            ExperimentConfig(n, p, m, ALL_TESTS, reps or 1000, 0.05, master_seed, parallelism, mc_reps)
            for m in NULLS
            for n, p in TABLE2_GRID
        ]
    if name in ("table3", "table4"):
        kind, rhos = (AltKind.GLOBAL_TOEPLITZ, TABLE3_RHOS) if name == "table3" else (AltKind.LOCAL_PAIR, TABLE4_RHOS)
        return [
            ExperimentConfig(200, 100, AltModel(kind, rho, m), RANK_TESTS, reps or 500, 0.05, master_seed, parallelism, mc_reps)
            for m in NULLS
            for rho in rhos
        ]
    raise DomainError(f"unknown preset {name!r}; expected one of {PRESETS}")


PRESETS = ("table2", "table3", "table4")
