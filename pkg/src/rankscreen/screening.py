"""Marginal screening scores and submodel selection.

Four marginal utilities are available:

``rrcs``   omega rank statistic of each column against the response
           (tie-neutral centering by default, see :func:`rrcs_scores`)
``sis``    inner product of the standardized column with the response
``gcorr``  correlation after the best polynomial transform of the column
``mmle``   slope of a one-predictor logistic fit (binary response only)

All of them return a signed p-vector; ranking is always by magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .stats import DegenerateColumnError, omega_from_concordant, omega_tie_neutral

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
METHODS = ("rrcs", "sis", "gcorr", "mmle")


@dataclass
class Dataset:
    """Design matrix ``X`` (n x p), response ``y`` and per-column kind tags."""

    X: np.ndarray
    y: np.ndarray
    column_kinds: tuple = None
    names: tuple = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {self.X.shape}")
        n, p = self.X.shape
        if self.y.size != n:
            raise ValueError(f"X has {n} rows but y has {self.y.size} entries")
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not np.isfinite(self.y).all():
            raise ValueError("non-finite values in response")
        bad = ~np.isfinite(self.X).all(axis=0)
        if bad.any():
            raise ValueError(f"non-finite values in column {int(np.flatnonzero(bad)[0])}")
        if self.column_kinds is None:
            self.column_kinds = (CONTINUOUS,) * p
        if len(self.column_kinds) != p:
            raise ValueError("column_kinds length does not match p")
        if self.names is None:
            self.names = tuple(f"X{k + 1}" for k in range(p))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def with_response(self, y):
        return Dataset(self.X, y, self.column_kinds, self.names)

    def subset(self, cols):
        cols = np.asarray(cols, dtype=np.int64)
        return Dataset(
            self.X[:, cols],
            self.y,
            tuple(self.column_kinds[k] for k in cols),
            tuple(self.names[k] for k in cols),
        )


@dataclass(frozen=True)
class ThresholdRule:
    """Either keep the ``d`` largest |scores| or every |score| above ``gamma``."""

    kind: str
    d: int = None
    gamma: float = None

    def __post_init__(self):
        if self.kind == "top_d":
            if self.d is None or int(self.d) < 1:
                raise ValueError("top_d rule needs a positive integer d")
        elif self.kind == "threshold":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("threshold rule needs gamma > 0")
        else:
            raise ValueError(f"unknown rule kind {self.kind!r}")

    @classmethod
    def top(cls, d):
        return cls("top_d", d=int(d))

    @classmethod
    def threshold(cls, gamma):
        return cls("threshold", gamma=float(gamma))

    @classmethod
    def from_rate(cls, c5, kappa, n):
        """gamma_n = c5 * n**(-kappa) with 0 < kappa < 1/2."""
        if not 0 < kappa < 0.5:
            raise ValueError("kappa must lie in (0, 1/2)")
        if not c5 > 0:
            raise ValueError("c5 must be positive")
        return cls("threshold", gamma=c5 * n ** (-kappa))


@dataclass
class ScreeningResult:
    scores: np.ndarray
    method: str
    order: np.ndarray
    selected: np.ndarray
    meta: dict = field(default_factory=dict)


RRCS_TIES = ("neutral", "literal")


def rrcs_scores(d: Dataset, parallel=False, ties="neutral") -> np.ndarray:
    """omega_k for every column; O(p n log n) with exact integer counting.

    ``ties="neutral"`` scores (C - D) / (2n(n-1)), which is the strict
    omega statistic whenever the data are tie-free (bit-for-bit) and keeps
    a zero null value when y or a column has ties (binary responses,
    categorical predictors). ``ties="literal"`` returns C/(n(n-1)) - 1/4
    as is; its null value drifts with the share of tied pairs, which
    reorders |omega| across columns with different tie patterns.
    """
    if ties not in RRCS_TIES:
        raise ValueError(f"unknown ties mode {ties!r}")
    conc, disc = _kernels.pair_columns(d.X, d.y, parallel=parallel)
    if ties == "literal":
        return omega_from_concordant(conc, d.n)
    return omega_tie_neutral(conc, disc, d.n)


def _standardize(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    zero = np.flatnonzero(sd == 0.0)
    if zero.size:
        k = int(zero[0])
        raise DegenerateColumnError(f"column {k} has zero variance", column=k)
    return (X - mu) / sd


def sis_scores(d: Dataset) -> np.ndarray:
    """X_std^T y with columns centered and scaled to unit (n-1)-variance."""
    return _standardize(d.X).T @ d.y


def _gcorr(X, y, degree):
    n, p = X.shape
    yc = y - y.mean()
    syy = yc @ yc
    scores = np.zeros(p)
    eff = np.zeros(p, dtype=np.int64)
    if syy == 0.0:
        return scores, eff
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    for k in range(p):
        if sd[k] == 0.0:
            continue
        z = (X[:, k] - mu[k]) / sd[k]
        deg = min(degree, np.unique(z).size - 1)
        while deg >= 1:
            B = np.column_stack([z ** j for j in range(1, deg + 1)])
            B -= B.mean(axis=0)
            q, r = np.linalg.qr(B)
            rd = np.abs(np.diag(r))
            if rd.min() > 1e-8 * max(rd.max(), 1.0):
                break
            deg -= 1
        if deg < 1:
            continue
        proj = q.T @ yc
        scores[k] = math.sqrt(min(1.0, (proj @ proj) / syy))
        eff[k] = deg
    return scores, eff


def gcorr_scores(d: Dataset, degree=3) -> np.ndarray:
    """sqrt(R^2) of y regressed on the centered powers x_k, ..., x_k**degree.

    The polynomial class stands in for the supremum correlation over
    transformations of the predictor. Columns whose basis is rank-deficient
    (few distinct values) fall back to the largest full-rank degree.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    return _gcorr(d.X, d.y, int(degree))[0]


def _logistic_slopes(Z, y, max_iter=50, tol=1e-8):
    """Vectorized Newton-Raphson for p separate intercept+slope logistic fits."""
    n, p = Z.shape
    b0 = np.zeros(p)
    b1 = np.zeros(p)
    ybar = y.mean()
    b0[:] = math.log(ybar / (1 - ybar))
    converged = np.zeros(p, dtype=bool)
    for _ in range(max_iter):
        eta = b0 + Z * b1
        mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
        r = y[:, None] - mu
        g0 = r.sum(axis=0)
        g1 = (Z * r).sum(axis=0)
        w = mu * (1 - mu)
        h00 = w.sum(axis=0)
        h01 = (w * Z).sum(axis=0)
        h11 = (w * Z * Z).sum(axis=0)
        det = h00 * h11 - h01 * h01
        det = np.where(det > 1e-300, det, 1e-300)
        s0 = (h11 * g0 - h01 * g1) / det
        s1 = (h00 * g1 - h01 * g0) / det
        active = ~converged
        b0[active] += s0[active]
        b1[active] += s1[active]
        converged |= np.maximum(np.abs(g0), np.abs(g1)) / n < tol
        if converged.all():
            break
    return b1, converged


def mmle_scores(d: Dataset, return_flags=False):
    """|slope| of the marginal logistic fit of y on each standardized column.

    Separated columns (the MLE does not exist) get ``inf`` so they rank first.
    With ``return_flags`` also returns boolean arrays (separated, converged).
    """
    y = d.y
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("mmle needs a binary 0/1 response")
    if y.min() == y.max():
        raise ValueError("mmle needs both classes present in the response")
    Z = _standardize(d.X)
    one = y == 1.0
    lo1, hi1 = Z[one].min(axis=0), Z[one].max(axis=0)
    lo0, hi0 = Z[~one].min(axis=0), Z[~one].max(axis=0)
    separated = (hi0 <= lo1) | (hi1 <= lo0)
    slopes, converged = _logistic_slopes(Z, y)
    scores = np.abs(slopes)
    scores[separated] = np.inf
    if return_flags:
        return scores, separated, converged
    return scores


def rank_order(scores) -> np.ndarray:
    """Indices sorted by descending |score|, smaller index first on ties."""
    return np.argsort(-np.abs(np.asarray(scores, dtype=np.float64)), kind="stable")


def select(scores, rule: ThresholdRule) -> np.ndarray:
    """Selected column indices (0-based) in rank order."""
    scores = np.asarray(scores, dtype=np.float64)
    order = rank_order(scores)
    if rule.kind == "top_d":
        if rule.d > scores.size:
            raise ValueError(f"d={rule.d} exceeds p={scores.size}")
        return order[: rule.d]
    return order[np.abs(scores[order]) > rule.gamma]


def default_model_size(n) -> int:
    """[n / log n], the per-round screening size."""
    if n < 3:
        raise ValueError("n must be >= 3")
    return int(math.floor(n / math.log(n)))


def compute_scores(d: Dataset, method, **kwargs):
    if method == "rrcs":
        return rrcs_scores(d, **kwargs)
    if method == "sis":
        return sis_scores(d)
    if method == "gcorr":
        return gcorr_scores(d, **kwargs)
    if method == "mmle":
        return mmle_scores(d)
    raise ValueError(f"unknown screening method {method!r}")


def screen(d: Dataset, method="rrcs", rule: ThresholdRule = None, **kwargs) -> ScreeningResult:
    """Score every column and select a submodel (default: top [n/log n])."""
    meta = {}
    if method == "gcorr":
        scores, eff = _gcorr(d.X, d.y, int(kwargs.get("degree", 3)))
        reduced = np.flatnonzero(eff < kwargs.get("degree", 3))
        if reduced.size:
            meta["reduced_basis_columns"] = reduced.tolist()
    elif method == "mmle":
        scores, separated, converged = mmle_scores(d, return_flags=True)
        if separated.any():
            meta["separated_columns"] = np.flatnonzero(separated).tolist()
        if not converged.all():
            meta["unconverged_columns"] = np.flatnonzero(~converged & ~separated).tolist()
    else:
        scores = compute_scores(d, method, **kwargs)
    if rule is None:
        rule = ThresholdRule.top(min(d.p, default_model_size(max(d.n, 3))))
    return ScreeningResult(scores, method, rank_order(scores), select(scores, rule), meta)
