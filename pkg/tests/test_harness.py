import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from rankscreen.harness import (
    CSV_COLUMNS,
    RunOptions,
    default_threads,
    inclusion_proportion,
    minimum_model_size,
    mmms_rsd,
    read_csv,
    run_scenario,
    write_csv,
    write_json,
)
from rankscreen.screening import ThresholdRule
from rankscreen.simgen import ScenarioConfig


def test_minimum_model_size_examples():
    s = np.array([0.9, 0.1, 0.5, -0.7, 0.2])
    assert minimum_model_size(s, [0]) == 1
    assert minimum_model_size(s, [0, 3]) == 2
    assert minimum_model_size(s, [1]) == 5
    # ties: smaller index ranks first
    assert minimum_model_size(np.array([0.3, 0.3]), [1]) == 2
    with pytest.raises(ValueError):
        minimum_model_size(s, [])


def _linear_scan(scores, truth):
    # smallest d such that the top-d set covers the truth
    mags = np.abs(scores)
    for d in range(1, len(scores) + 1):
        top = sorted(range(len(scores)), key=lambda k: (-mags[k], k))[:d]
        if set(truth) <= set(top):
            return d


@given(hnp.arrays(np.float64, st.integers(1, 25), elements=st.integers(-5, 5).map(float)), st.data())
def test_minimum_model_size_matches_scan(scores, data):
    truth = data.draw(st.lists(st.integers(0, scores.size - 1), min_size=1, max_size=scores.size, unique=True))
    assert minimum_model_size(scores, truth) == _linear_scan(scores, truth)


def test_mmms_rsd_examples():
    assert mmms_rsd([3, 3, 3, 3]) == (3.0, 0.0)
    med, rsd = mmms_rsd([1, 2, 3, 4])
    assert med == 2.5
    assert rsd == pytest.approx((3.25 - 1.75) / 1.34, abs=1e-12)
    with pytest.raises(ValueError):
        mmms_rsd([])


def test_inclusion_proportion():
    sets = [[0, 1, 2], [0, 2], [2, 1, 0, 7]]
    assert inclusion_proportion(sets, [0, 1, 2]) == pytest.approx(2 / 3)
    assert inclusion_proportion(sets, [2]) == 1.0


def test_single_replication():
    cfg = ScenarioConfig(example="ex1", p=50, n=30, seed=1)
    (s,) = run_scenario(cfg, ["rrcs"], reps=1)
    assert s.reps == 1 and s.inclusion_proportion in (0.0, 1.0)
    assert s.rsd == 0.0 and s.mmms == s.min_model_sizes[0]


def test_run_validation():
    cfg = ScenarioConfig(example="ex1", p=20, n=20)
    with pytest.raises(ValueError):
        run_scenario(cfg, ["rrcs"], reps=0)
    with pytest.raises(ValueError):
        run_scenario(cfg, ["lasso"], reps=1)


def test_threshold_rule_is_honored():
    cfg = ScenarioConfig(example="ex1", p=40, n=30, seed=2)
    (s,) = run_scenario(cfg, ["sis"], reps=3, rule=ThresholdRule.top(5))
    assert all(len(r["selected"]) == 5 for r in s.details)
    (s,) = run_scenario(cfg, ["sis"], reps=3, options=RunOptions(model_size=7))
    assert all(len(r["selected"]) == 7 for r in s.details)


def test_parallel_matches_serial(tmp_path):
    cfg = ScenarioConfig(example="ex1", p=60, n=30, rho=0.5, noise="t3", seed=8)
    methods = ["rrcs", "sis", "irrcs"]
    a = run_scenario(cfg, methods, reps=5, parallelism=1)
    b = run_scenario(cfg, methods, reps=5, parallelism=2)
    write_json(a, tmp_path / "a.json")
    write_json(b, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_csv_round_trip(tmp_path):
    cfg = ScenarioConfig(example="ex1", p=30, n=20, seed=3)
    summ = run_scenario(cfg, ["rrcs", "gcorr"], reps=2)
    write_csv(summ, tmp_path / "r.csv")
    rows = read_csv(tmp_path / "r.csv")
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    assert [r["method"] for r in rows] == ["rrcs", "gcorr"]


def test_failures_count_as_misses(monkeypatch):
    import rankscreen.harness as h

    real = h.compute_scores

    def flaky(d, m):
        if d.y[0] > 0:
            raise FloatingPointError("boom")
        return real(d, m)

    monkeypatch.setattr(h, "compute_scores", flaky)
    cfg = ScenarioConfig(example="ex1", p=30, n=30, seed=4)
    (s,) = run_scenario(cfg, ["rrcs"], reps=10)
    assert s.failures > 0
    assert len(s.min_model_sizes) == 10 - s.failures
    assert s.inclusion_proportion <= (10 - s.failures) / 10
    assert all("boom" in r["error"] for r in s.details if r["error"])


def test_default_threads(monkeypatch):
    monkeypatch.setenv("RANKSCREEN_THREADS", "6")
    assert default_threads() == 6
    monkeypatch.setenv("RANKSCREEN_THREADS", "junk")
    assert default_threads() == 1
    monkeypatch.delenv("RANKSCREEN_THREADS")
    assert default_threads() == 1
