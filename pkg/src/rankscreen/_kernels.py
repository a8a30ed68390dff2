"""Compiled inner loops.

Everything here operates on plain float64/int64 arrays and is kept free of
validation; the public wrappers in :mod:`rankscreen.stats`,
:mod:`rankscreen.screening` and :mod:`rankscreen.estimation` check inputs.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _merge_count(a, buf):
    """Sort ``a`` in place (bottom-up merge sort) and return the number of
    strict inversions, i.e. pairs i < j with a[i] > a[j]."""
    n = a.shape[0]
    inv = np.int64(0)
    # insertion-sort short runs first; each shift past a strictly larger
    # element is one inversion
    width = 16
    for lo in range(0, n, width):
        hi = min(lo + width, n)
        for i in range(lo + 1, hi):
            v = a[i]
            j = i - 1
            while j >= lo and a[j] > v:
                a[j + 1] = a[j]
                j -= 1
            inv += i - 1 - j
            a[j + 1] = v
    src = a
    dst = buf
    in_buf = False
    while width < n:
        lo = 0
        while lo < n:
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    inv += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo += 2 * width
        src, dst = dst, src
        in_buf = not in_buf
        width *= 2
    if in_buf:
        a[:] = src
    return inv


@njit(cache=True)
def _tie_pairs(v):
    # v sorted ascending; number of unordered pairs with equal value
    n = v.shape[0]
    total = np.int64(0)
    run = np.int64(1)
    for i in range(1, n):
        if v[i] == v[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


@njit(cache=True)
def _y_groups(y):
    """Stable ascending order of y and the boundaries of its tie groups."""
    n = y.shape[0]
    o1 = np.argsort(y, kind="mergesort")
    starts = np.empty(n + 1, dtype=np.int64)
    g = 0
    starts[0] = 0
    for i in range(1, n):
        if y[o1[i]] != y[o1[i - 1]]:
            g += 1
            starts[g] = i
    g += 1
    starts[g] = n
    return o1, starts[: g + 1]


@njit(cache=True)
def _counts_grouped(xk, starts, buf):
    """Concordance counts for one column.

    ``xk`` holds the column permuted into ascending-y order and ``starts``
    delimits runs of tied y. Sorting x inside each run gives the (y, x)
    lexicographic order; every remaining strict inversion of x is then a
    discordant pair. ``xk`` is overwritten.
    Returns (concordant, discordant, tied_x, tied_y, tied_both).
    """
    n = xk.shape[0]
    t_y = np.int64(0)
    t_xy = np.int64(0)
    for g in range(starts.shape[0] - 1):
        a = starts[g]
        b = starts[g + 1]
        m = b - a
        if m > 1:
            t_y += np.int64(m) * (m - 1) // 2
            xk[a:b] = np.sort(xk[a:b])
            t_xy += _tie_pairs(xk[a:b])
    disc = _merge_count(xk, buf)
    t_x = _tie_pairs(xk)
    total = np.int64(n) * (n - 1) // 2
    tied_x = t_x - t_xy
    tied_y = t_y - t_xy
    conc = total - disc - tied_x - tied_y - t_xy
    return conc, disc, tied_x, tied_y, t_xy


@njit(cache=True)
def concordance_counts(x, y):
    n = x.shape[0]
    o1, starts = _y_groups(y)
    xk = np.empty(n)
    for i in range(n):
        xk[i] = x[o1[i]]
    buf = np.empty(n)
    return _counts_grouped(xk, starts, buf)


@njit(cache=True)
def _pair_columns_serial(X, y):
    n, p = X.shape
    o1, starts = _y_groups(y)
    out = np.empty((2, p), dtype=np.int64)
    xk = np.empty(n)
    buf = np.empty(n)
    for k in range(p):
        for i in range(n):
            xk[i] = X[o1[i], k]
        c, d, _, _, _ = _counts_grouped(xk, starts, buf)
        out[0, k] = c
        out[1, k] = d
    return out


@njit(cache=True, parallel=True)
def _pair_columns_parallel(X, y):
    n, p = X.shape
    o1, starts = _y_groups(y)
    out = np.empty((2, p), dtype=np.int64)
    for k in prange(p):
        xk = np.empty(n)
        buf = np.empty(n)
        for i in range(n):
            xk[i] = X[o1[i], k]
        c, d, _, _, _ = _counts_grouped(xk, starts, buf)
        out[0, k] = c
        out[1, k] = d
    return out


def pair_columns(X, y, parallel=False):
    """(concordant, discordant) strict pair counts for every column of X against y."""
    # column-major so each column scan is contiguous
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    out = _pair_columns_parallel(X, y) if parallel else _pair_columns_serial(X, y)
    return out[0], out[1]


def concordant_columns(X, y, parallel=False):
    """Strict concordant-pair count C_k for every column of X against y."""
    return pair_columns(X, y, parallel)[0]


@njit(cache=True)
def _cd_sweep(X, r, beta, col_ss, sw, pen_w, idx, m):
    n = X.shape[0]
    max_delta = 0.0
    for k in range(m):
        j = idx[k]
        bj = beta[j]
        z = 0.0
        for i in range(n):
            z += sw[i] * X[i, j] * r[i]
        z = z / n + col_ss[j] * bj
        lam = pen_w[j]
        if z > lam:
            nb = (z - lam) / col_ss[j]
        elif z < -lam:
            nb = (z + lam) / col_ss[j]
        else:
            nb = 0.0
        d = nb - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * d
            beta[j] = nb
            if abs(d) > max_delta:
                max_delta = abs(d)
    return max_delta


@njit(cache=True)
def weighted_lasso_cd(X, r, beta, col_ss, sw, pen_w, tol, max_sweeps):
    """Coordinate descent for

        (1/2n) sum_i sw_i (r_i)^2 + sum_j pen_w_j |beta_j|

    with r = y - X beta held as a working residual (updated in place).
    ``col_ss[j]`` is (1/n) sum_i sw_i X_ij^2 (already jittered by the caller).
    Full sweeps alternate with sweeps over the current nonzero set; the
    routine stops once a full sweep moves no coordinate by ``tol`` or more.
    X should be Fortran-ordered. Returns the number of sweeps used.
    """
    q = X.shape[1]
    full = np.arange(q)
    act = np.empty(q, dtype=np.int64)
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        if _cd_sweep(X, r, beta, col_ss, sw, pen_w, full, q) < tol:
            return sweeps
        m = 0
        for j in range(q):
            if beta[j] != 0.0:
                act[m] = j
                m += 1
        while sweeps < max_sweeps:
            sweeps += 1
            if _cd_sweep(X, r, beta, col_ss, sw, pen_w, act, m) < tol:
                break
    return max_sweeps
