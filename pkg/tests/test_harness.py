import json

import jsonschema
import numpy as np
import pytest

from rank_rmt.errors import DomainError, ParseError
from rank_rmt.harness import (
    CSV_COLUMNS,
    PRESETS,
    RESULT_SCHEMA,
    TABLE2_GRID,
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    preset,
    read_csv,
    read_json,
    replication_seed,
    run_experiment,
    write_csv,
    write_json,
)
from rank_rmt.independence import ANALYTIC_TESTS, StatisticCache, TestId
from rank_rmt.models import AltModel, NullModel, generate


@pytest.fixture(scope="module")
def small():
    cfg = ExperimentConfig(60, 30, "normal", ("rho_l2", "rho_log", "irho_l2", "k_max"), reps=40, mc_reps=200, master_seed=9)
    return run_experiment(cfg)


def test_config_validation():
    with pytest.raises(DomainError):
        ExperimentConfig(50, 10, reps=0)
    with pytest.raises(DomainError):
        ExperimentConfig(50, 10, alpha=1.0)
    cfg = ExperimentConfig(50, 10, AltModel("local_pair", 0.3, "cauchy"))
    assert cfg.experiment_id == "local_pair:cauchy-n50-p10-rho0.3"
    assert cfg.tests == ANALYTIC_TESTS


def test_rates_are_counts_over_reps(small):
    for s in small.summaries:
        assert s.applicable
        assert s.reject_rate == s.reject_count / 40


def test_parallelism_does_not_change_results(small):
    again = run_experiment(small.config, parallelism=4)
    assert again == small
    for tid in small.per_rep:
        np.testing.assert_array_equal(again.per_rep[tid]["statistic"], small.per_rep[tid]["statistic"])


def test_replication_reproducible_in_isolation(small):
    cfg = small.config
    r = 17
    x = generate(cfg.model, cfg.n, cfg.p, replication_seed(cfg.master_seed, r))
    assert StatisticCache(x).statistic("rho_l2") == small.per_rep[TestId.RHO_L2]["statistic"][r]


def test_single_rep_rate():
    res = run_experiment(ExperimentConfig(40, 10, reps=1))
    assert all(s.reject_rate in (0.0, 1.0) for s in res.summaries)


def test_log_not_applicable_when_p_at_least_n():
    res = run_experiment(ExperimentConfig(20, 40, reps=3))
    assert not res.summary("rho_log").applicable
    assert not res.summary("irho_log").applicable
    assert res.summary("rho_l2").applicable
    assert res.rate("rho_log") is None


def test_json_round_trip_and_schema(small):
    other = run_experiment(ExperimentConfig(20, 40, AltModel("global_toeplitz", 0.1), reps=2))
    text = write_json([small, other])
    jsonschema.validate(json.loads(text), RESULT_SCHEMA)
    assert read_json(text) == [small, other]
    with pytest.raises(ParseError):
        read_json("{not json")


def test_csv_one_row_per_test(small):
    text = write_csv([small])
    rows = read_csv(text)
    assert len(rows) == len(small.config.tests)
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [r["test_id"] for r in rows] == [t.value for t in small.config.tests]
    assert float(rows[0]["reject_rate"]) == small.summaries[0].reject_rate
    with pytest.raises(ParseError):
        read_csv("a,b\n1,2\n")


def test_csv_marks_not_applicable():
    res = run_experiment(ExperimentConfig(20, 40, reps=2))
    rows = {r["test_id"]: r for r in read_csv(write_csv([res]))}
    assert rows["rho_log"]["reject_rate"] == "NA"
    assert rows["rho_l2"]["rho"] == "NA"


def test_config_dict_round_trip():
    cfg = ExperimentConfig(80, 20, AltModel("global_toeplitz", 0.05, "mixed", True), ("rho_max",), 7, 0.1, 3, 2, 250)
    assert config_from_dict(config_to_dict(cfg)) == cfg
    with pytest.raises(ParseError):
        config_from_dict({"p": 3})
    with pytest.raises(ParseError):
        config_from_dict({"n": 10, "p": 3, "model": "local_pair:normal"})


def test_presets():
    t2 = preset("table2", reps=5)
    assert len(t2) == 27
    assert [(c.n, c.p) for c in t2[:9]] == list(TABLE2_GRID)
    assert {c.p / c.n for c in t2} == {0.5, 0.7, 2.0}
    assert {c.model for c in t2} == set(NullModel)
    t3 = preset("table3")
    assert sorted({c.model.rho for c in t3}) == [0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08]
    assert all(c.reps == 500 and (c.n, c.p) == (200, 100) for c in t3)
    t4 = preset("table4")
    assert sorted({c.model.rho for c in t4}) == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
    assert set(PRESETS) == {"table2", "table3", "table4"}
    with pytest.raises(DomainError):
        preset("table9")


@pytest.mark.slow
def test_table2_normal_cell(sizes):
    res = sizes(200, 100)
    for tid, paper in (("rho_l2", 0.05), ("rho_log", 0.049), ("irho_l2", 0.052)):
        assert abs(res.rate(tid) - paper) <= 0.02


@pytest.mark.slow
def test_y2_cell_marks_log_not_applicable(sizes):
    res = sizes(200, 400)
    assert not res.summary("rho_log").applicable


@pytest.mark.slow
def test_rank_tests_distribution_free_sizes(sizes):
    normal, cauchy = sizes(200, 100, "normal"), sizes(200, 100, "cauchy")
    for tid in ANALYTIC_TESTS:
        assert abs(normal.rate(tid) - cauchy.rate(tid)) < 0.03


@pytest.mark.slow
def test_power_increases_with_rho(powers):
    rates = [powers("global_toeplitz", rho, ("rho_l2", "rho_log")).rate("rho_l2") for rho in (0.02, 0.04, 0.06, 0.08)]
    assert all(b >= a - 0.03 for a, b in zip(rates, rates[1:]))
    assert rates[-1] > rates[0]
