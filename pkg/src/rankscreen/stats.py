"""Rank-concordance kernels: Kendall's tau, the omega screening statistic and
Pearson correlation, plus an O(n^2) reference for omega.

Ties follow the sign convention: a pair tied in x or y contributes nothing to
either the concordant or the discordant count, and no tau-b style correction
is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


class DegenerateColumnError(ValueError):
    """Raised when a column (or the response) has zero variance."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


@dataclass(frozen=True)
class PairedSample:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x, y = _as_pair(self.x, self.y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class ConcordanceCounts:
    """Partition of the n(n-1)/2 unordered pairs.

    ``tied_x`` and ``tied_y`` count pairs tied in exactly that coordinate;
    ``tied_both`` pairs tied in both.
    """

    concordant: int
    discordant: int
    tied_x: int
    tied_y: int
    tied_both: int
    total_pairs: int


def _as_pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: len(x)={x.size}, len(y)={y.size}")
    if x.size < 2:
        raise ValueError(f"need at least 2 observations, got {x.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in input")
    return x, y


def concordance_counts(x, y) -> ConcordanceCounts:
    """Classify all unordered pairs in O(n log n) via sort + merge inversion count."""
    x, y = _as_pair(x, y)
    c, d, tx, ty, tb = _kernels.concordance_counts(x, y)
    n = x.size
    return ConcordanceCounts(int(c), int(d), int(tx), int(ty), int(tb), n * (n - 1) // 2)


def kendall_tau(x, y) -> float:
    """Kendall's tau-a: 2(C - D) / (n(n-1))."""
    cc = concordance_counts(x, y)
    return float(2 * (cc.concordant - cc.discordant)) / float(2 * cc.total_pairs)


def omega_from_concordant(concordant, n):
    """omega = C/(n(n-1)) - 1/4, evaluated from the exact integer numerator.

    Works elementwise on an integer array of concordant counts. Forming
    4C - n(n-1) in integers before the single division makes omega equal to
    tau/4 bit-for-bit on tie-free data.
    """
    nn = np.int64(n) * np.int64(n - 1)
    num = 4 * np.asarray(concordant, dtype=np.int64) - nn
    return num / (4.0 * float(nn))


def omega_tie_neutral(concordant, discordant, n):
    """(C - D) / (2 n(n-1)), i.e. tau-a / 4, from the exact integer numerator.

    Without ties 2(C - D) = 4C - n(n-1), so this equals
    :func:`omega_from_concordant` bit-for-bit. With ties it stays centered at
    zero under independence, whereas the literal statistic drifts toward
    -(fraction of tied pairs) / 4.
    """
    nn = np.int64(n) * np.int64(n - 1)
    num = 2 * (np.asarray(concordant, dtype=np.int64) - np.asarray(discordant, dtype=np.int64))
    return num / (4.0 * float(nn))


def omega_score(x, y) -> float:
    """Quarter-scaled concordance statistic in [-1/4, 1/4].

    C counts ordered pairs (i, j) with x_i < x_j and y_i < y_j, which is the
    same as the number of unordered strictly concordant pairs.
    """
    x, y = _as_pair(x, y)
    c = _kernels.concordance_counts(x, y)[0]
    return float(omega_from_concordant(c, x.size))


def brute_force_omega(x, y) -> float:
    """Literal double loop over ordered pairs; reference for :func:`omega_score`."""
    x, y = _as_pair(x, y)
    n = x.size
    c = 0
    for i in range(n):
        for j in range(n):
            if i != j and x[i] < x[j] and y[i] < y[j]:
                c += 1
    return float(omega_from_concordant(c, n))


def brute_force_counts(x, y) -> ConcordanceCounts:
    """O(n^2) pair classification, used as a test oracle."""
    x, y = _as_pair(x, y)
    n = x.size
    c = d = tx = ty = tb = 0
    for i in range(n):
        for j in range(i + 1, n):
            sx = np.sign(x[i] - x[j])
            sy = np.sign(y[i] - y[j])
            if sx == 0 and sy == 0:
                tb += 1
            elif sx == 0:
                tx += 1
            elif sy == 0:
                ty += 1
            elif sx == sy:
                c += 1
            else:
                d += 1
    return ConcordanceCounts(c, d, tx, ty, tb, n * (n - 1) // 2)


def pearson(x, y) -> float:
    x, y = _as_pair(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = xc @ xc
    syy = yc @ yc
    if sxx == 0.0:
        raise DegenerateColumnError("x has zero variance", column="x")
    if syy == 0.0:
        raise DegenerateColumnError("y has zero variance", column="y")
    r = (xc @ yc) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))
