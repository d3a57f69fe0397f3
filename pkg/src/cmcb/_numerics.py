"""Small numerical kernels: bracketing bisection, adaptive Gauss-Kronrod
quadrature and Sturm-sequence bisection for symmetric tridiagonal matrices."""

from __future__ import annotations

import heapq
import math
from typing import Callable

import numpy as np
from numba import njit

from .errors import ConvergenceFailure, QuadratureFailure, RootNotFound


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 0.0,
    rtol: float = 1e-15,
    maxiter: int = 400,
    f_lo: float | None = None,
    f_hi: float | None = None,
) -> tuple[float, float, float]:
    """Shrink a sign-change bracket of ``f``.

    Returns ``(lo, hi, mid)`` where ``f(lo)`` and ``f(hi)`` still have
    strictly opposite signs and ``hi - lo <= xtol + rtol*max(|lo|, |hi|)``.
    If the midpoint hits an exact zero it is returned as the root and the
    bracket is left at its last strictly-signed state.
    """
    f_lo = f(lo) if f_lo is None else f_lo
    f_hi = f(hi) if f_hi is None else f_hi
    if not (f_lo < 0 < f_hi or f_hi < 0 < f_lo):
        raise RootNotFound(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(maxiter):
        if hi - lo <= xtol + rtol * max(abs(lo), abs(hi)):
            break
        mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return lo, hi, mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    else:
        raise RootNotFound("bisection iteration budget exhausted")
    return lo, hi, lo + 0.5 * (hi - lo)


# QUADPACK qk15 abscissae and weights
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[1:7:2] = _WG[:3]
_WG_FULL[7] = _WG[3]
_WG_FULL[9:15:2] = _WG[2::-1]


def _gk15(f, a, b):
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    fx = np.array([f(center + half * x) for x in _NODES], dtype=float)
    kronrod = half * float(_WK @ fx)
    gauss = half * float(_WG_FULL @ fx)
    return kronrod, abs(kronrod - gauss)


def adaptive_quad(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    max_evals: int = 1_000_000,
) -> tuple[float, float]:
    """Globally adaptive G7/K15 quadrature of ``f`` over ``[a, b]``.

    Returns ``(value, error_estimate)`` with ``error_estimate <= tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    value, err = _gk15(f, a, b)
    evals = 15
    heap = [(-err, a, b, value)]
    total_val, total_err = value, err
    while total_err > tol:
        if evals + 30 > max_evals:
            raise QuadratureFailure(
                f"error estimate {total_err:.3e} above tol {tol:.3e} after {evals} evaluations"
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise QuadratureFailure("interval subdivision reached machine precision")
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        evals += 30
        total_val += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
    # re-sum to shed accumulated update rounding
    total_val = math.fsum(item[3] for item in heap)
    return sign * total_val, total_err


@njit(cache=True)
def _sturm_count(d, e2, x):
    # number of eigenvalues strictly below x (LDL^T pivot signs)
    n = d.shape[0]
    count = 0
    q = d[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = -1e-300
        q = d[i] - x - e2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


@njit(cache=True)
def _bisect_eigs(d, e2, indices, lo0, hi0, rtol, maxiter):
    m = indices.shape[0]
    out = np.empty(m)
    converged = True
    for j in range(m):
        k = indices[j]
        lo = lo0
        hi = hi0
        it = 0
        while hi - lo > rtol * max(abs(lo), abs(hi), 1e-300):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _sturm_count(d, e2, mid) > k:
                hi = mid
            else:
                lo = mid
            it += 1
            if it > maxiter:
                converged = False
                break
        out[j] = 0.5 * (lo + hi)
    return out, converged


def sturm_count(diag, offdiag, x: float) -> int:
    """Number of eigenvalues of the symmetric tridiagonal matrix below ``x``."""
    d = np.ascontiguousarray(diag, dtype=float)
    e = np.ascontiguousarray(offdiag, dtype=float)
    return int(_sturm_count(d, e * e, float(x)))


def tridiagonal_eigenvalues(
    diag,
    offdiag,
    count: int | None = None,
    rtol: float = 4e-16,
    maxiter: int = 200,
) -> np.ndarray:
    """Ascending eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.

    Parameters
    ----------
    diag, offdiag : array_like
        Main diagonal (length n) and off-diagonal (length n-1).
    count : int, optional
        Only the ``count`` smallest eigenvalues; all of them by default.
    """
    d = np.ascontiguousarray(diag, dtype=float)
    e = np.ascontiguousarray(offdiag, dtype=float)
    n = d.shape[0]
    if e.shape[0] != max(n - 1, 0):
        raise ValueError("offdiag must have length len(diag) - 1")
    if n == 0:
        return np.empty(0)
    radius = np.zeros(n)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    lo = float(np.min(d - radius))
    hi = float(np.max(d + radius))
    pad = 1e-12 * max(abs(lo), abs(hi), 1.0)
    k = n if count is None else min(int(count), n)
    vals, ok = _bisect_eigs(d, e * e, np.arange(k), lo - pad, hi + pad, rtol, maxiter)
    if not ok:
        raise ConvergenceFailure("Sturm bisection did not isolate every eigenvalue")
    return vals
