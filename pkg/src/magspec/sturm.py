"""Sturm-sequence eigenvalue counting for symmetric tridiagonal matrices."""

import numpy as np
from numba import njit


@njit(cache=True)
def sturm_count(diag, off, x):
    """Number of eigenvalues strictly below ``x``.

    ``off[i]`` couples rows i and i+1.  Counts negative pivots of the LDL^T
    factorization of ``T - x I``; a zero pivot is nudged to a tiny positive
    value, which keeps eigenvalues equal to ``x`` out of the count.
    """
    n = diag.shape[0]
    tiny = 1e-300
    count = 0
    q = diag[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = tiny
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if q < 0.0:
            count += 1
    return count


@njit(cache=True)
def _bisect_kth(diag, off, k, lo, hi, tol):
    # smallest x with count(x) > k, i.e. the (k+1)-th eigenvalue
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sturm_count(diag, off, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def gershgorin(diag, off):
    r = np.zeros_like(diag)
    r[:-1] += np.abs(off)
    r[1:] += np.abs(off)
    return float(np.min(diag - r)), float(np.max(diag + r))


def eigenvalues_below(diag, off, x, rel_tol=1e-12):
    """Eigenvalues below ``x`` by bisection, to ``rel_tol`` times the spectral width."""
    diag = np.ascontiguousarray(diag, dtype=float)
    off = np.ascontiguousarray(off, dtype=float)
    lo, hi = gershgorin(diag, off)
    n = sturm_count(diag, off, x)
    tol = rel_tol * max(hi - lo, 1e-300)
    return np.array([_bisect_kth(diag, off, k, lo, min(hi, x), tol) for k in range(n)])
