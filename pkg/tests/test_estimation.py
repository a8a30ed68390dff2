import math

import numpy as np
import pytest
from scipy.stats import norm

from rankscreen.estimation import (
    SmoothingSpec,
    fit_penalized_linear,
    fit_penalized_logistic,
    fit_psmrc,
    lambda_grid,
    select_lambda_bic,
    smoothed_mrc_gradient,
    smoothed_mrc_objective,
)
from rankscreen.penalties import PenaltySpec
from rankscreen.screening import Dataset


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _double_loop(X, y, beta, h):
    n = len(y)
    u = X @ beta
    tot = 0.0
    for i in range(n):
        for j in range(n):
            if i != j and y[i] > y[j]:
                tot += norm.cdf((u[i] - u[j]) / h)
    return tot / (n * (n - 1))


def test_objective_matches_double_loop(rng):
    X = rng.standard_normal((25, 4))
    y = X[:, 0] + 0.5 * rng.standard_normal(25)
    y[3] = y[7]  # a tie: neither ordered pair counts
    beta = _unit([1, 0.5, -0.2, 0])
    d = Dataset(X, y)
    got = smoothed_mrc_objective(beta, d, SmoothingSpec(h=0.3, rule="fixed"))
    assert abs(got - _double_loop(X, y, beta, 0.3)) < 1e-12


def test_small_bandwidth_limits(rng):
    X = rng.standard_normal((40, 3))
    beta = _unit([1, -1, 2])
    y = X @ beta
    d = Dataset(X, y)
    s = SmoothingSpec(h=1e-9, rule="fixed")
    assert smoothed_mrc_objective(beta, d, s) == pytest.approx(0.5, abs=1e-12)
    assert smoothed_mrc_objective(-beta, d, s) == pytest.approx(0.0, abs=1e-12)


def test_objective_invariant_to_monotone_y(rng):
    X = rng.standard_normal((30, 3))
    y = X[:, 1] + rng.standard_normal(30)
    beta = _unit([0.2, 1, 0])
    s = SmoothingSpec(h=0.5, rule="fixed")
    a = smoothed_mrc_objective(beta, Dataset(X, y), s)
    assert a == smoothed_mrc_objective(beta, Dataset(X, np.exp(y)), s)


def test_gradient_matches_finite_differences(rng):
    X = rng.standard_normal((30, 5))
    y = X[:, 0] - X[:, 2] + rng.standard_normal(30)
    d = Dataset(X, y)
    s = SmoothingSpec(h=0.4, rule="fixed")
    beta = _unit(rng.standard_normal(5))
    g = smoothed_mrc_gradient(beta, d, s)
    eps = 1e-6
    for k in range(5):
        e = np.zeros(5)
        e[k] = eps
        fd = (smoothed_mrc_objective(beta + e, d, s, check_norm=False)
              - smoothed_mrc_objective(beta - e, d, s, check_norm=False)) / (2 * eps)
        assert abs(fd - g[k]) < 1e-5


def test_constant_response_has_no_pairs(rng):
    X = rng.standard_normal((20, 3))
    d = Dataset(X, np.ones(20))
    s = SmoothingSpec(h=0.5, rule="fixed")
    beta = _unit([1, 1, 1])
    assert smoothed_mrc_objective(beta, d, s) == 0.0
    assert np.all(smoothed_mrc_gradient(beta, d, s) == 0.0)


def test_norm_check(rng):
    d = Dataset(rng.standard_normal((10, 2)), rng.standard_normal(10))
    with pytest.raises(ValueError):
        smoothed_mrc_objective(np.array([1.0, 1.0]), d, SmoothingSpec(h=1.0, rule="fixed"))
    with pytest.raises(ValueError):
        SmoothingSpec(h=0.0, rule="fixed")


def test_psmrc_trace_monotone_and_recovery(rng):
    n, p = 200, 8
    X = rng.standard_normal((n, p))
    beta0 = _unit([1, -1, 0, 0, 0, 0, 0, 0])
    y = np.exp(X @ beta0 + 0.3 * rng.standard_normal(n))
    d = Dataset(X, y)
    init = _unit(np.ones(p))
    fit = fit_psmrc(d, PenaltySpec("SCAD", lam=0.02), SmoothingSpec(), init)
    tr = np.array(fit.objective_trace)
    assert np.all(np.diff(tr) >= -1e-12)
    assert abs(np.linalg.norm(fit.beta) - 1) < 1e-12
    assert set(fit.support.tolist()) == {0, 1}
    assert fit.beta @ beta0 > 0.99


def test_psmrc_single_column_sign(rng):
    x = rng.standard_normal((60, 1))
    y = x[:, 0] + 0.2 * rng.standard_normal(60)
    fit = fit_psmrc(Dataset(x, y), PenaltySpec("SCAD", lam=0.0), SmoothingSpec(), np.array([1.0]))
    assert fit.beta.tolist() == [1.0]


def _orthonormal_design(rng, n, p):
    A = rng.standard_normal((n, p))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(A)
    return Q * math.sqrt(n)  # centered, 1/n column variance exactly 1


def test_lasso_orthonormal_soft_threshold(rng):
    n, p = 80, 6
    X = _orthonormal_design(rng, n, p)
    y = X @ np.array([2.0, -1.0, 0.3, 0, 0, 0]) + 0.5 * rng.standard_normal(n) + 4.0
    lam = 0.4
    fit = fit_penalized_linear(Dataset(X, y), PenaltySpec("L1", lam=lam))
    z = X.T @ (y - y.mean()) / n
    expect = np.sign(z) * np.maximum(np.abs(z) - lam, 0)
    assert np.max(np.abs(fit.beta - expect)) < 1e-6
    assert fit.intercept == pytest.approx(y.mean(), abs=1e-6)


def test_scad_orthonormal_unbiased_for_large_signal(rng):
    n, p = 80, 5
    X = _orthonormal_design(rng, n, p)
    y = X @ np.array([3.0, 0, 0, 0, 0]) + 0.1 * rng.standard_normal(n)
    fit = fit_penalized_linear(Dataset(X, y), PenaltySpec("SCAD", lam=0.3))
    z = X.T @ (y - y.mean()) / n
    assert fit.beta[0] == pytest.approx(z[0], abs=1e-6)


@pytest.mark.parametrize("loss", ["least_squares", "huber"])
def test_linear_large_lambda_is_empty(rng, loss):
    X = rng.standard_normal((50, 10))
    y = X[:, 0] + rng.standard_normal(50)
    d = Dataset(X, y)
    lmax = lambda_grid(d, "least_squares")[0]
    fit = fit_penalized_linear(d, PenaltySpec("SCAD", lam=2 * lmax), loss=loss)
    assert fit.support.size == 0


def test_linear_trace_nonincreasing(rng):
    X = rng.standard_normal((60, 15))
    y = X[:, :3] @ np.array([1.5, -1, 0.8]) + rng.standard_normal(60)
    fit = fit_penalized_linear(Dataset(X, y), PenaltySpec("SCAD", lam=0.1))
    assert np.all(np.diff(fit.objective_trace) <= 1e-10)


def test_logistic_trace_and_recovery(rng):
    X = rng.standard_normal((400, 10))
    eta = 2 * X[:, 0] - 2 * X[:, 1]
    y = (rng.random(400) < 1 / (1 + np.exp(-eta))).astype(float)
    lam, fit = select_lambda_bic(Dataset(X, y), "SCAD", "logistic", return_fit=True)
    assert {0, 1} <= set(fit.support.tolist())
    assert fit.support.size <= 4
    one = fit_penalized_logistic(Dataset(X, y), PenaltySpec("SCAD", lam=0.05))
    assert np.all(np.diff(one.objective_trace) <= 1e-10)


def test_bic_single_lambda_grid(rng):
    X = rng.standard_normal((40, 5))
    y = X[:, 0] + rng.standard_normal(40)
    assert select_lambda_bic(Dataset(X, y), "SCAD", "least_squares", grid=[0.123]) == 0.123


def test_bic_pure_noise_selects_little():
    rng = np.random.default_rng(3)
    sizes = []
    for _ in range(10):
        X = rng.standard_normal((100, 20))
        _, fit = select_lambda_bic(Dataset(X, rng.standard_normal(100)), "SCAD", "least_squares",
                                   return_fit=True)
        sizes.append(fit.support.size)
    assert np.median(sizes) <= 1


def test_bic_linear_recovers_support(rng):
    X = rng.standard_normal((100, 30))
    y = X[:, [2, 5, 9]] @ np.array([1.0, -1.5, 2.0]) + rng.standard_normal(100)
    for loss in ("least_squares", "huber"):
        _, fit = select_lambda_bic(Dataset(X, y), "SCAD", loss, return_fit=True)
        assert set(fit.support.tolist()) == {2, 5, 9}


def test_huber_resists_outliers(rng):
    X = rng.standard_normal((100, 5))
    y = 2 * X[:, 0] + 0.3 * rng.standard_normal(100)
    y[:8] += 200
    fit = fit_penalized_linear(Dataset(X, y), PenaltySpec("SCAD", lam=0.0), loss="huber")
    assert fit.beta[0] == pytest.approx(2.0, abs=0.2)


def test_psmrc_bic_picks_true_support(rng):
    n, p = 150, 6
    X = rng.standard_normal((n, p))
    b = _unit([1, 1, 0, 0, 0, 0])
    y = np.log1p(np.exp(X @ b + 0.2 * rng.standard_normal(n)))
    init = _unit(np.ones(p))
    _, fit = select_lambda_bic(Dataset(X, y), "SCAD", "psmrc", init=init, return_fit=True)
    assert set(fit.support.tolist()) == {0, 1}
    with pytest.raises(ValueError):
        select_lambda_bic(Dataset(X, y), "SCAD", "psmrc")
