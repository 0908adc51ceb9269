"""Compiled inner loops: Thomas algorithm, implicit time marching, slope sweeps."""

import numpy as np
from numba import njit


@njit(cache=True)
def thomas_factor(lower, diag, upper):
    """Forward-elimination coefficients of a tridiagonal matrix.

    ``lower[i] = A[i+1, i]`` and ``upper[i] = A[i, i+1]``. Returns the
    modified super-diagonal ``cp`` and the pivots ``piv``.
    """
    n = diag.shape[0]
    cp = np.empty(n)
    piv = np.empty(n)
    piv[0] = diag[0]
    cp[0] = upper[0] / piv[0] if n > 1 else 0.0
    for i in range(1, n):
        piv[i] = diag[i] - lower[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = upper[i] / piv[i]
    cp[n - 1] = 0.0
    return cp, piv


@njit(cache=True)
def thomas_solve_factored(lower, cp, piv, rhs, out):
    n = rhs.shape[0]
    out[0] = rhs[0] / piv[0]
    for i in range(1, n):
        out[i] = (rhs[i] - lower[i - 1] * out[i - 1]) / piv[i]
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


@njit(cache=True)
def thomas_solve(lower, diag, upper, rhs):
    cp, piv = thomas_factor(lower, diag, upper)
    out = np.empty(rhs.shape[0])
    thomas_solve_factored(lower, cp, piv, rhs, out)
    return out


@njit(cache=True)
def implicit_march(lower, diag, upper, mass_dt, loads, start):
    """Backward Euler recursion ``A y[k+1] = mass_dt * y[k] + loads[k+1]``.

    ``A`` is the tridiagonal (lower, diag, upper); it is factored once.
    Returns an array of shape ``loads.shape`` with ``y[0] = start``.
    """
    n_levels, m = loads.shape
    out = np.empty((n_levels, m))
    out[0, :] = start
    cp, piv = thomas_factor(lower, diag, upper)
    rhs = np.empty(m)
    for k in range(n_levels - 1):
        for i in range(m):
            rhs[i] = mass_dt[i] * out[k, i] + loads[k + 1, i]
        thomas_solve_factored(lower, cp, piv, rhs, out[k + 1])
    return out


@njit(cache=True)
def sweep_down(values, step, tol):
    """Lower nodes until every cell rise and drop is at most ``step``.

    One forward and one backward pass give the largest ``step``-Lipschitz
    minorant of ``values``. Nodes already within ``tol`` are left untouched.
    """
    out = values.copy()
    n = out.shape[0]
    for i in range(n - 1):
        if out[i + 1] > out[i] + step + tol:
            out[i + 1] = out[i] + step
    for i in range(n - 2, -1, -1):
        if out[i] > out[i + 1] + step + tol:
            out[i] = out[i + 1] + step
    return out


@njit(cache=True)
def sweep_up(values, step, tol):
    """Mirror of :func:`sweep_down`: smallest Lipschitz majorant."""
    out = values.copy()
    n = out.shape[0]
    for i in range(n - 1):
        if out[i + 1] < out[i] - step - tol:
            out[i + 1] = out[i] - step
    for i in range(n - 2, -1, -1):
        if out[i] < out[i + 1] - step - tol:
            out[i] = out[i + 1] - step
    return out
