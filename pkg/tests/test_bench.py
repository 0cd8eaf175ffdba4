import csv

import numpy as np
import pytest
from scipy import stats

from cgpp import Instance, PackingSolution, run_policy, solve_offline, write_instance
from cgpp.bench import (
    RUN_FIELDS, SUMMARY_FIELDS, ConfigError, config_from_dict, fill_rate_series, histogram_overlap, mean_ci,
    pattern_histogram, run_experiment, write_report,
)

from conftest import CASE1, CASE2, table_instance
from oracles import check_solution


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def case1_file(tmp_path):
    path = tmp_path / "case1.txt"
    write_instance(table_instance(CASE1), path)
    return path


def test_fixed_instance_gaps(case1_file, tmp_path):
    config = config_from_dict({"policies": ["bestfit", "offline"], "instances": [{"file": str(case1_file)}]})
    report = run_experiment(config)
    out = write_report(report, tmp_path / "out")
    runs = read_rows(out / "runs.csv")
    assert [(r["policy"], r["bins"], r["l2"], r["gap"]) for r in runs] == [("bestfit", "3", "2", "1"), ("offline", "2", "2", "0")]
    assert report.n_errors == 0


def test_empty_config_writes_headers(tmp_path):
    out = write_report(run_experiment(config_from_dict({"instances": []})), tmp_path)
    assert (out / "runs.csv").read_text() == ",".join(RUN_FIELDS) + "\n"
    assert (out / "summary.csv").read_text() == ",".join(SUMMARY_FIELDS) + "\n"


def small_config(**extra):
    d = {"policies": ["bestfit", "cgpp"], "params": {"section_length": 200, "memory_length": 50},
         "instances": [{"preset": "Uniform-C", "n_items": 400, "seeds": [1, 2, 3]}]}
    d.update(extra)
    return config_from_dict(d)


def test_summary_is_mean_of_runs(tmp_path):
    out = write_report(run_experiment(small_config()), tmp_path)
    runs, summary = read_rows(out / "runs.csv"), read_rows(out / "summary.csv")
    assert len(runs) == 6 and len(summary) == 2
    for row in summary:
        gaps = [int(r["gap"]) for r in runs if r["policy"] == row["policy"]]
        assert float(row["mean_gap"]) == pytest.approx(np.mean(gaps), abs=1e-4)
        assert int(row["runs"]) == 3
    assert all(int(r["gap"]) >= 0 for r in runs)


def test_rerun_is_byte_identical(tmp_path):
    a = write_report(run_experiment(small_config()), tmp_path / "a")
    b = write_report(run_experiment(small_config(), jobs=2), tmp_path / "b")
    for name in ("runs.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_errors_are_recorded(tmp_path):
    config = config_from_dict({"policies": ["bestfit"], "instances": [{"file": str(tmp_path / "missing.txt")}]})
    report = run_experiment(config)
    assert report.n_errors == 1 and "missing.txt" in report.runs[0]["error"]
    assert report.summary[0]["runs"] == 0


@pytest.mark.parametrize("bad", [
    {"policies": ["first-fit"]},
    {"params": {"nope": 1}},
    {"profile": "huge"},
    {"instances": [{"preset": "Uniform", "file": "x"}]},
    {"instances": [{"preset": "Uniform", "seeds": [1, 1]}]},
])
def test_bad_configs(bad):
    with pytest.raises(ConfigError):
        config_from_dict(bad)


def test_mean_ci_matches_scipy():
    x = [3, 7, 4, 9, 1]
    mean, half = mean_ci(x)
    lo, hi = stats.t.interval(0.95, len(x) - 1, loc=np.mean(x), scale=stats.sem(x))
    assert mean == pytest.approx(np.mean(x)) and half == pytest.approx((hi - lo) / 2)
    assert mean_ci([5]) == (5.0, 0.0)


def test_fill_rate_series(case1):
    offline, _ = solve_offline(case1)
    assert [r[2] for r in fill_rate_series(offline, case1)] == [1.0, 1.0]
    bf, _ = run_policy("bestfit", case1)
    assert [r[2] for r in fill_rate_series(bf, case1)] == pytest.approx([0.9, 0.9, 0.2])
    assert fill_rate_series(PackingSolution([], [], 10), case1) == []


def test_histogram_of_identical_bins():
    inst = Instance(10, [5], [0] * 8)
    sol, _ = run_policy("bestfit", inst)
    rows = pattern_histogram(sol, inst)
    assert len(rows) == 1 and rows[0][1] == 4 and rows[0][2] == 1.0


def test_offline_histogram_case2(case2):
    sol, _ = solve_offline(case2)
    check_solution(sol, case2)
    rows = pattern_histogram(sol, case2)
    assert sum(n for _, n, _ in rows) == 4 and all(rate == 1.0 for *_, rate in rows)


def test_histogram_overlap(case1):
    offline = pattern_histogram(solve_offline(case1)[0], case1)
    bf = pattern_histogram(run_policy("bestfit", case1)[0], case1)
    assert histogram_overlap(offline, offline) == 1.0
    assert histogram_overlap(bf, offline) == 0.0
    assert histogram_overlap([], offline) == 0.0
