import numpy as np
import pytest

from rankscreen.estimation import FitResult
from rankscreen.iterative import (
    IterativeConfig,
    irrcs,
    isis,
    residual_pearson_scores_linear,
    residual_rank_scores_linear,
    residual_rank_scores_transformation,
)
from rankscreen.screening import Dataset, rank_order, rrcs_scores, select, ThresholdRule, sis_scores


def _fit(beta, intercept=0.0):
    beta = np.asarray(beta, dtype=float)
    return FitResult(beta, np.flatnonzero(beta), [], True, 0, intercept=intercept)


def _literal_transformation(X, y, t, l):
    n = len(y)
    tot = 0
    for i in range(n):
        for j in range(n):
            if i != j and X[i, l] < X[j, l]:
                tot += int(y[i] < y[j]) - int(t[i] < t[j])
    return tot / (n * (n - 1)) - 0.25


def test_zero_fit_reduces_to_rrcs(rng):
    X = rng.standard_normal((40, 12))
    y = X[:, 0] + rng.standard_normal(40)
    d = Dataset(X, y)
    got = residual_rank_scores_linear(d, _fit(np.zeros(12)), [])
    assert np.array_equal(got, rrcs_scores(d))
    assert np.allclose(residual_pearson_scores_linear(d, _fit(np.zeros(12)), []), sis_scores(d), atol=1e-15)


def test_linear_residual_scores_skip_active(rng):
    X = rng.standard_normal((30, 6))
    y = 3 * X[:, 1] + X[:, 4]
    d = Dataset(X, y)
    got = residual_rank_scores_linear(d, _fit([3.0]), [1])
    ystar = y - 3 * X[:, 1]
    ref = rrcs_scores(Dataset(X[:, [0, 2, 3, 4, 5]], ystar))
    assert np.array_equal(got, ref)
    assert rank_order(got)[0] == 3  # column 4 among the inactive ones


def test_transformation_scores_match_literal_sum(rng):
    X = rng.integers(0, 5, (18, 4)).astype(float)  # ties in X
    y = rng.integers(0, 6, 18).astype(float)       # ties in y
    beta = np.array([1.0, 0, 0, 0])
    got = residual_rank_scores_transformation(Dataset(X, y), _fit(beta), [0])
    t = X @ beta
    ref = [_literal_transformation(X, y, t, l) for l in (1, 2, 3)]
    assert np.allclose(got, ref, atol=1e-15, rtol=0)


def test_transformation_perfect_index(rng):
    X = rng.standard_normal((25, 3))
    beta = np.array([0.6, 0.8, 0.0])
    y = np.exp(X @ beta)
    got = residual_rank_scores_transformation(Dataset(X, y), _fit(beta), [0, 1])
    assert got.tolist() == [-0.25]


def test_transformation_scores_invariant_under_exp(rng):
    X = rng.standard_normal((30, 5))
    y = X[:, 0] + rng.standard_normal(30)
    f = _fit([1.0, 0, 0, 0, 0])
    a = residual_rank_scores_transformation(Dataset(X, y), f, [0])
    b = residual_rank_scores_transformation(Dataset(X, np.exp(y)), f, [0])
    assert np.array_equal(a, b)


def test_one_round_equals_screen_plus_refit(rng):
    X = rng.standard_normal((80, 60))
    y = X[:, [0, 1, 2]] @ np.array([2.0, -2.0, 1.5]) + rng.standard_normal(80)
    d = Dataset(X, y)
    cfg = IterativeConfig(max_rounds=1, per_round_screen_size=10)
    sel, trace = irrcs(d, cfg)
    screened = select(rrcs_scores(d), ThresholdRule.top(10))
    assert trace.rounds[0].screened.tolist() == screened.tolist()
    assert set(sel.tolist()) <= set(screened.tolist())
    assert {0, 1, 2} <= set(sel.tolist())
    assert trace.stop_reason in ("max_rounds", "no_new_variables")


@pytest.mark.parametrize("method", [irrcs, isis])
def test_rounds_disjoint_and_budget(rng, method):
    X = rng.standard_normal((60, 120))
    y = X[:, :6] @ np.array([1, -1, 1, -1, 1, 1.0]) + rng.standard_normal(60)
    cfg = IterativeConfig(size_budget=15, per_round_screen_size=8, max_rounds=6)
    sel, trace = method(Dataset(X, y), cfg)
    seen = set()
    for rec in trace.rounds:
        new = set(rec.new.tolist())
        assert not (new & seen)
        seen |= new
    assert len(sel) == len(set(sel.tolist())) <= 15
    assert trace.stop_reason in ("budget_reached", "max_rounds", "no_new_variables")


def test_fill_to_budget_pads_exactly(rng):
    X = rng.standard_normal((50, 100))
    y = X[:, 0] + rng.standard_normal(50)
    sel, trace = irrcs(Dataset(X, y), IterativeConfig(size_budget=20, fill_to_budget=True))
    assert sel.size == 20 == np.unique(sel).size
    assert 0 in sel.tolist()


def _hidden_design(rng, n=150, p=60, a=0.7):
    # X3 is built so that cov(X3, y) = 0 although it enters the model
    X = rng.standard_normal((n, p))
    X[:, 3] = a * (X[:, 0] + X[:, 1]) / np.sqrt(2) + np.sqrt(1 - a * a) * rng.standard_normal(n)
    y = X[:, 0] + X[:, 1] - np.sqrt(2) * a * X[:, 3] + 0.3 * rng.standard_normal(n)
    return Dataset(X, y)


def test_iterative_finds_hidden_variable():
    rng = np.random.default_rng(9)
    it_hits = plain_hits = 0
    cfg = IterativeConfig(size_budget=6, per_round_screen_size=3, max_rounds=4)
    for _ in range(10):
        d = _hidden_design(rng)
        sel, _ = irrcs(d, cfg)
        it_hits += {0, 1, 3} <= set(sel.tolist())
        plain_hits += 3 in select(rrcs_scores(d), ThresholdRule.top(6)).tolist()
    assert it_hits >= 9
    assert plain_hits <= 3


def test_transformation_mode_runs(rng):
    X = rng.standard_normal((60, 30))
    b = np.zeros(30)
    b[:2] = 1 / np.sqrt(2)
    y = np.exp(X @ b + 0.2 * rng.standard_normal(60))
    cfg = IterativeConfig(model_kind="transformation", per_round_screen_size=5, max_rounds=2)
    sel, trace = irrcs(Dataset(X, y), cfg)
    assert {0, 1} <= set(sel.tolist())
    sel2, _ = irrcs(Dataset(X, np.log(y)), cfg)
    assert sel.tolist() == sel2.tolist()


def test_deterministic(rng):
    X = rng.standard_normal((50, 40))
    y = X[:, 0] - X[:, 5] + rng.standard_normal(50)
    cfg = IterativeConfig(size_budget=12, fill_to_budget=True)
    a, _ = irrcs(Dataset(X, y), cfg)
    b, _ = irrcs(Dataset(X.copy(), y.copy()), cfg)
    assert a.tolist() == b.tolist()


def test_config_validation():
    with pytest.raises(ValueError):
        IterativeConfig(model_kind="poisson")
    with pytest.raises(ValueError):
        IterativeConfig(max_rounds=0)
    with pytest.raises(ValueError):
        IterativeConfig(refit_scope="residual", model_kind="logistic")
    with pytest.raises(ValueError):
        IterativeConfig(size_budget=50).resolve(50, 100)
    assert IterativeConfig().resolve(50, 100) == (12, 49)
    assert IterativeConfig(comparator="sis").refit_model == "least_squares"
    assert IterativeConfig().refit_model == "huber"


def test_refit_failure_is_reported(rng, monkeypatch):
    import rankscreen.iterative as it

    def boom(*a, **k):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(it, "select_lambda_bic", boom)
    X = rng.standard_normal((30, 10))
    sel, trace = irrcs(Dataset(X, X[:, 0]), IterativeConfig(fill_to_budget=True))
    assert trace.stop_reason == "refit_failed" and "singular" in trace.error
    assert sel.size == 0
