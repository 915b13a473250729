"""Sturm-sequence bisection for symmetric tridiagonal matrices."""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["count_below", "eigvals_bisect", "gershgorin"]


@njit(cache=True)
def _count(d, e2, x):
    # number of eigenvalues strictly below x (LDL^T inertia)
    n = d.shape[0]
    c = 0
    q = d[0] - x
    if q < 0.0:
        c += 1
    for k in range(1, n):
        if q == 0.0:
            q = 1e-300
        q = d[k] - x - e2[k - 1] / q
        if q < 0.0:
            c += 1
    return c


@njit(cache=True)
def _bisect(d, e2, k0, k1, lo, hi, tol):
    out = np.empty(k1 - k0)
    for k in range(k0, k1):
        a = lo
        b = hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            if mid == a or mid == b:
                break
            if _count(d, e2, mid) > k:
                b = mid
            else:
                a = mid
        out[k - k0] = 0.5 * (a + b)
        # eigenvalues are sorted: later ones live above this one
        lo = a
    return out


def gershgorin(d: np.ndarray, e: np.ndarray) -> tuple[float, float]:
    ae = np.abs(e)
    r = np.zeros_like(d)
    r[:-1] += ae
    r[1:] += ae
    return float(np.min(d - r)), float(np.max(d + r))


def count_below(d: np.ndarray, e: np.ndarray, x: float) -> int:
    """Number of eigenvalues of tridiag(e, d, e) below ``x``."""
    d = np.ascontiguousarray(d, dtype=float)
    e2 = np.ascontiguousarray(e, dtype=float) ** 2
    return int(_count(d, e2, float(x)))


def eigvals_bisect(d: np.ndarray, e: np.ndarray, start: int, stop: int, tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues with ascending indices ``start <= k < stop``, each to absolute ``tol``."""
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    n = d.shape[0]
    if not 0 <= start <= stop <= n:
        raise IndexError(f"index range [{start}, {stop}) outside matrix of size {n}")
    lo, hi = gershgorin(d, e)
    pad = 1e-12 * max(1.0, abs(lo), abs(hi))
    return _bisect(d, e * e, start, stop, lo - pad, hi + pad, tol)
