"""Penalized refitting used by the iterative screeners.

* :func:`fit_psmrc` maximizes the normal-cdf smoothed rank-correlation
  objective minus a sparsity penalty over the unit sphere.
* :func:`fit_penalized_linear` is penalized least squares or Huber
  M-estimation solved by coordinate descent.
* :func:`fit_penalized_logistic` is the same machinery wrapped in IRLS.

Nonconvex penalties (SCAD, MCP) are handled by local linear approximation:
each outer iteration freezes the penalty slope at the current iterate and
solves the resulting weighted-L1 problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import _kernels
from .penalties import PenaltySpec, penalty_derivative, penalty_value
from .screening import Dataset

SUPPORT_TOL = 1e-6
CONVERGENCE_TOL = 1e-8
ARMIJO_C = 1e-4
MAX_OUTER = 500
RIDGE_JITTER = 1e-8
HUBER_K = 1.345

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass
class FitResult:
    beta: np.ndarray
    support: np.ndarray
    objective_trace: list
    converged: bool
    iterations: int
    intercept: float = 0.0
    lam: float = 0.0
    objective: float = float("nan")
    flags: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SmoothingSpec:
    """Bandwidth for the normal-cdf smoother.

    ``rule="fixed"`` uses ``h`` directly. ``rule="n_power"`` sets
    h = constant * n**exponent * MAD of the pairwise index differences at the
    initial direction.
    """

    h: float = None
    rule: str = "n_power"
    exponent: float = -1.0 / 3.0
    constant: float = 1.0

    def __post_init__(self):
        if self.rule not in ("fixed", "n_power"):
            raise ValueError(f"unknown bandwidth rule {self.rule!r}")
        if self.rule == "fixed" and not (self.h is not None and self.h > 0):
            raise ValueError("bandwidth h must be positive")

    def bandwidth(self, X, beta):
        if self.rule == "fixed":
            return float(self.h)
        n = X.shape[0]
        u = X @ beta
        iu, ju = np.triu_indices(n, 1)
        diff = u[iu] - u[ju]
        mad = np.median(np.abs(diff - np.median(diff)))
        if not mad > 0:
            mad = 1.0
        return float(self.constant * n ** self.exponent * mad)


class _Pairs:
    """Ordered pairs (i, j) with y_i > y_j, enumerated in row-major order.

    Only comparisons of y enter, so the pair list (and every sum over it)
    is identical under any strictly increasing transform of y.
    """

    def __init__(self, y):
        y = np.asarray(y, dtype=np.float64)
        self.n = y.size
        self.i, self.j = np.nonzero(y[:, None] > y[None, :])
        self.denom = float(self.n * (self.n - 1))


def _smoothed(X, beta, pairs, h, grad=False):
    u = X @ beta
    z = (u[pairs.i] - u[pairs.j]) / h
    val = ndtr(z).sum() / pairs.denom
    if not grad:
        return val
    w = np.exp(-0.5 * z * z) * _INV_SQRT_2PI
    coef = np.bincount(pairs.i, w, pairs.n) - np.bincount(pairs.j, w, pairs.n)
    return val, (X.T @ coef) / (pairs.denom * h)


def _check_sphere(beta):
    nrm = np.linalg.norm(beta)
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"beta must have unit norm, got {nrm:.6g}")


def _resolve_h(s, X, beta):
    h = s.bandwidth(X, beta)
    if not h > 0:
        raise ValueError("bandwidth h must be positive")
    return h


def smoothed_mrc_objective(beta, d: Dataset, s: SmoothingSpec, check_norm=True) -> float:
    """S_n(beta) = sum over ordered pairs with y_i > y_j of Phi((x_i - x_j)'beta / h),
    divided by n(n-1)."""
    beta = np.asarray(beta, dtype=np.float64)
    if check_norm:
        _check_sphere(beta)
    return float(_smoothed(d.X, beta, _Pairs(d.y), _resolve_h(s, d.X, beta)))


def smoothed_mrc_gradient(beta, d: Dataset, s: SmoothingSpec, check_norm=True) -> np.ndarray:
    """Euclidean gradient of S_n (not projected onto the sphere's tangent space).

    With ``rule="n_power"`` the bandwidth is evaluated at ``beta`` and then
    held fixed, so this is the partial derivative at constant h.
    """
    beta = np.asarray(beta, dtype=np.float64)
    if check_norm:
        _check_sphere(beta)
    return _smoothed(d.X, beta, _Pairs(d.y), _resolve_h(s, d.X, beta), grad=True)[1]


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def fit_psmrc(d: Dataset, pen: PenaltySpec, s: SmoothingSpec, init, max_outer=MAX_OUTER) -> FitResult:
    """Penalized smoothed maximum rank correlation on the unit sphere.

    Outer loop: LLA weights w_j = p'_lambda(|beta_j|). Inner loop: proximal
    gradient ascent on S_n(b) - sum w_j |b_j| followed by renormalization,
    with step halving until the sufficient-increase test passes. Because the
    LLA surrogate minorizes the penalized objective and touches it at the
    current point, the recorded objective never decreases.
    """
    X = d.X
    init = np.asarray(init, dtype=np.float64)
    if init.shape != (d.p,):
        raise ValueError(f"init must have length {d.p}")
    nrm = np.linalg.norm(init)
    if not nrm > 0:
        raise ValueError("init must be nonzero")
    beta = init / nrm
    pairs = _Pairs(d.y)
    h = _resolve_h(s, X, beta)

    def penalized(b):
        return _smoothed(X, b, pairs, h) - float(np.sum(penalty_value(pen, np.abs(b))))

    obj = penalized(beta)
    trace = [obj]
    converged = False
    step = 1.0
    it = 0
    for it in range(1, max_outer + 1):
        w = penalty_derivative(pen, np.abs(beta))
        sval, g = _smoothed(X, beta, pairs, h, grad=True)
        q_cur = sval - w @ np.abs(beta)
        for _inner in range(50):
            t = min(step * 2.0, 1e6)
            moved = False
            while t > 1e-14:
                cand = _soft(beta + t * g, t * w)
                cn = np.linalg.norm(cand)
                if cn > 0:
                    cand /= cn
                    s_c, g_c = _smoothed(X, cand, pairs, h, grad=True)
                    q_c = s_c - w @ np.abs(cand)
                    if q_c >= q_cur + ARMIJO_C * float((cand - beta) @ (cand - beta)) / t:
                        moved = True
                        break
                t *= 0.5
            if not moved:
                break
            gain = q_c - q_cur
            beta, g, q_cur, step = cand, g_c, q_c, t
            if gain < 1e-10:
                break
        new_obj = penalized(beta)
        trace.append(new_obj)
        if abs(new_obj - obj) < CONVERGENCE_TOL:
            obj = new_obj
            converged = True
            break
        obj = new_obj

    beta = np.where(np.abs(beta) < SUPPORT_TOL, 0.0, beta)
    flags = {"bandwidth": h}
    nb = np.linalg.norm(beta)
    if nb > 0:
        beta = beta / nb
    else:
        flags["over_penalized"] = True
    support = np.flatnonzero(beta)
    final = penalized(beta) if nb > 0 else float("nan")
    return FitResult(beta, support, trace, converged, it, lam=pen.lam, objective=final, flags=flags)


def _standardize_cols(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    flags = {}
    zero = sd == 0.0
    if zero.any():
        flags["constant_columns"] = np.flatnonzero(zero).tolist()
        sd = np.where(zero, 1.0, sd)
    return (X - mu) / sd, mu, sd, flags


def _huber_rho(r, c):
    a = np.abs(r)
    return np.where(a <= c, 0.5 * r * r, c * a - 0.5 * c * c)


def _robust_scale(r):
    mad = np.median(np.abs(r - np.median(r))) / 0.6744897501960817
    return mad if mad > 0 else max(float(np.std(r)), 1e-12)


def _penalized_irls(Z, y, pen, kind, max_outer=100, tol=CONVERGENCE_TOL, beta0=None):
    """Shared solver on standardized columns ``Z`` with an unpenalized intercept.

    kind: 'least_squares', 'huber' or 'logistic'.
    """
    n, q = Z.shape
    A = np.empty((n, q + 1), order="F")
    A[:, 0] = 1.0
    A[:, 1:] = Z
    coef = np.zeros(q + 1)
    if beta0 is not None:
        coef[1:] = beta0
    if kind == "logistic":
        ybar = min(max(y.mean(), 1e-6), 1 - 1e-6)
        coef[0] = math.log(ybar / (1 - ybar))
    elif kind == "huber":
        coef[0] = np.median(y - Z @ coef[1:])
    else:
        coef[0] = np.mean(y - Z @ coef[1:])
    flags = {}
    trace = []
    converged = False
    it = 0
    c_huber = None
    for it in range(1, max_outer + 1):
        prev = coef.copy()
        eta = A @ coef
        if kind == "logistic":
            mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
            sw = np.maximum(mu * (1 - mu), 1e-10)
            target = eta + (y - mu) / sw
        else:
            target = y
            r0 = y - eta
            if kind == "huber":
                c_huber = HUBER_K * _robust_scale(r0)
                a = np.abs(r0)
                sw = np.where(a <= c_huber, 1.0, c_huber / np.maximum(a, 1e-300))
            else:
                sw = np.ones(n)
        pen_w = np.empty(q + 1)
        pen_w[0] = 0.0
        pen_w[1:] = penalty_derivative(pen, np.abs(coef[1:]))
        col_ss = (sw[:, None] * A * A).sum(axis=0) / n
        tiny = col_ss < RIDGE_JITTER
        if tiny.any():
            flags["ridge_jitter"] = True
        col_ss = col_ss + RIDGE_JITTER * tiny
        r = target - A @ coef
        _kernels.weighted_lasso_cd(A, r, coef, col_ss, sw, pen_w, tol, 10000)
        trace.append(_irls_objective(A, y, coef, pen, kind, c_huber))
        if np.max(np.abs(coef - prev)) < tol:
            converged = True
            break
    return coef, trace, converged, it, flags, c_huber


def _irls_objective(A, y, coef, pen, kind, c_huber):
    n = y.size
    eta = A @ coef
    if kind == "logistic":
        loss = np.sum(np.logaddexp(0.0, eta) - y * eta) / n
    elif kind == "huber":
        loss = np.sum(_huber_rho(y - eta, c_huber)) / n
    else:
        r = y - eta
        loss = 0.5 * (r @ r) / n
    return float(loss + np.sum(penalty_value(pen, np.abs(coef[1:]))))


def _finish_linear(coef, mu, sd, trace, converged, it, flags, pen):
    beta_std = np.where(np.abs(coef[1:]) < SUPPORT_TOL, 0.0, coef[1:])
    beta = beta_std / sd
    intercept = coef[0] - float(beta @ mu)
    support = np.flatnonzero(beta)
    flags = dict(flags)
    flags["beta_standardized"] = beta_std
    return FitResult(beta, support, trace, converged, it, intercept=intercept,
                     lam=pen.lam, objective=trace[-1] if trace else float("nan"), flags=flags)


def _warm(warm_start):
    if warm_start is None:
        return None
    return np.asarray(warm_start.flags["beta_standardized"], dtype=np.float64)


def fit_penalized_linear(d: Dataset, pen: PenaltySpec, loss="least_squares", warm_start=None) -> FitResult:
    """Minimize sum loss(y_i - a - x_i'beta)/n + sum p_lambda(|beta_j|).

    Squared loss is (1/2) r^2. The Huber threshold is 1.345 times the
    normalized MAD of the current residuals, re-estimated every outer step.
    Columns are standardized internally (1/n variance) and the penalty acts
    on the standardized scale; the returned ``beta`` is on the input scale.
    ``warm_start`` (a previous fit on the same columns) seeds both the
    coordinate descent and the first LLA weights.
    """
    if loss not in ("least_squares", "huber"):
        raise ValueError(f"unknown loss {loss!r}")
    Z, mu, sd, flags = _standardize_cols(d.X)
    coef, trace, conv, it, f2, c = _penalized_irls(Z, d.y, pen, loss, beta0=_warm(warm_start))
    flags.update(f2)
    if c is not None:
        flags["huber_c"] = c
    return _finish_linear(coef, mu, sd, trace, conv, it, flags, pen)


def fit_penalized_logistic(d: Dataset, pen: PenaltySpec, warm_start=None) -> FitResult:
    if not np.isin(d.y, (0.0, 1.0)).all():
        raise ValueError("logistic fit needs a binary 0/1 response")
    Z, mu, sd, flags = _standardize_cols(d.X)
    coef, trace, conv, it, f2, _ = _penalized_irls(Z, d.y, pen, "logistic", beta0=_warm(warm_start))
    flags.update(f2)
    return _finish_linear(coef, mu, sd, trace, conv, it, flags, pen)


def lambda_grid(d: Dataset, model, n_lambda=25, ratio=1e-3, init=None, s=None):
    """Geometric grid from a data-driven lambda_max down to ratio * lambda_max."""
    if model == "psmrc":
        beta = np.asarray(init, dtype=np.float64)
        beta = beta / np.linalg.norm(beta)
        pairs = _Pairs(d.y)
        h = _resolve_h(s or SmoothingSpec(), d.X, beta)
        g = _smoothed(d.X, beta, pairs, h, grad=True)[1]
        # at lambda >= max|beta_init| every coordinate sits in the linear
        # part of SCAD/MCP, so the top of the grid penalizes all of them
        lmax = max(float(np.max(np.abs(g))), float(np.max(np.abs(beta))))
    else:
        Z = _standardize_cols(d.X)[0]
        yc = d.y - d.y.mean()
        lmax = float(np.max(np.abs(Z.T @ yc)) / d.n)
    if not lmax > 0:
        lmax = 1.0
    return lmax * np.logspace(0.0, math.log10(ratio), n_lambda)


def _bic(d, fit, model):
    n = d.n
    df = fit.support.size
    if model == "psmrc":
        return -(fit.flags["smoothed_value"] - df * math.log(n) / (2 * n))
    eta = fit.intercept + d.X @ fit.beta
    if model == "logistic":
        dev = 2.0 * np.sum(np.logaddexp(0.0, eta) - d.y * eta)
        return dev + df * math.log(n)
    r = d.y - eta
    if model == "huber":
        crit = 2.0 * float(np.mean(_huber_rho(r, fit.flags["huber_c"])))
    else:
        crit = float(r @ r) / n
    return n * math.log(max(crit, 1e-300)) + df * math.log(n)


def _fit_one(d, pen, model, init, s, warm=None):
    if model == "psmrc":
        fit = fit_psmrc(d, pen, s, init)
        pairs = _Pairs(d.y)
        fit.flags["smoothed_value"] = float(_smoothed(d.X, fit.beta, pairs, fit.flags["bandwidth"])) \
            if fit.support.size else 0.0
        return fit
    if model == "logistic":
        return fit_penalized_logistic(d, pen, warm_start=warm)
    return fit_penalized_linear(d, pen, loss=model, warm_start=warm)


def select_lambda_bic(d: Dataset, family, model, grid=None, init=None, s=None, return_fit=False,
                      df_max=None):
    """Pick lambda on ``grid`` by BIC.

    model: 'least_squares', 'huber', 'logistic' or 'psmrc'. Linear models
    minimize n log(residual criterion) + df log n (deviance + df log n for
    logistic); PSMRC maximizes S_n - df log(n) / (2n). Ties go to the larger
    lambda.

    Linear and logistic fits run as a path from the largest lambda down,
    each warm-started at the previous solution. The path stops once the
    support exceeds ``df_max`` (default [n/2]) because the residual
    criterion collapses toward a saturated fit. PSMRC fits all start from
    ``init``.
    """
    if s is None:
        s = SmoothingSpec()
    if model == "psmrc" and init is None:
        raise ValueError("psmrc needs an initial direction")
    if grid is None:
        grid = lambda_grid(d, model, init=init, s=s)
    grid = np.sort(np.asarray(grid, dtype=np.float64))[::-1]
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    if df_max is None:
        df_max = d.n // 2
    base = PenaltySpec(family) if isinstance(family, str) else family
    best = None
    warm = None
    for k, lam in enumerate(grid):
        fit = _fit_one(d, base.with_lambda(lam), model, init, s, warm)
        if model != "psmrc":
            if k > 0 and fit.support.size > df_max:
                break
            warm = fit
        crit = _bic(d, fit, model)
        if best is None or crit < best[0]:
            best = (crit, float(lam), fit)
    if return_fit:
        return best[1], best[2]
    return best[1]
