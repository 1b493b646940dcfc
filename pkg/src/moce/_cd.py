"""Compiled coordinate-descent kernels for the LASSO objective

    (1 / 2n) ||y - X b||^2 + lam ||b||_1.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def _objective(r, beta, lam, n):
    return 0.5 * np.dot(r, r) / n + lam * np.sum(np.abs(beta))


@njit(cache=True)
def _sweep(X, r, beta, col_sq, lam, n, coords):
    max_change = 0.0
    for j in coords:
        if col_sq[j] == 0.0:
            beta[j] = 0.0
            continue
        old = beta[j]
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        z = g / n + col_sq[j] * old
        new = _soft(z, lam) / col_sq[j]
        delta = new - old
        if delta != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * delta
            beta[j] = new
            change = abs(delta) * np.sqrt(col_sq[j])
            if change > max_change:
                max_change = change
    return max_change


@njit(cache=True)
def coordinate_descent(X, r, beta, col_sq, lam, tol, max_sweeps, history):
    """Minimize in place.  ``r`` must equal ``y - X beta`` on entry.

    Full sweeps alternate with sweeps restricted to the current active set.
    Convergence is declared only after a full sweep whose largest scaled
    coefficient change is below ``tol``.  ``history[k]`` receives the objective
    after sweep ``k``.  Returns (sweeps used, converged flag).
    """
    n, p = X.shape
    all_coords = np.arange(p)
    sweeps = 0
    while sweeps < max_sweeps:
        change = _sweep(X, r, beta, col_sq, lam, n, all_coords)
        history[sweeps] = _objective(r, beta, lam, n)
        sweeps += 1
        if change < tol:
            return sweeps, True
        active = np.flatnonzero(beta)
        while sweeps < max_sweeps:
            change = _sweep(X, r, beta, col_sq, lam, n, active)
            history[sweeps] = _objective(r, beta, lam, n)
            sweeps += 1
            if change < tol:
                break
    return sweeps, False


@njit(cache=True)
def path_fit(X, y, lams, tol, max_sweeps):
    """Warm-started fits along a decreasing grid; returns a (len(lams), p) array."""
    n, p = X.shape
    col_sq = np.empty(p)
    for j in range(p):
        col_sq[j] = np.dot(X[:, j], X[:, j]) / n
    beta = np.zeros(p)
    r = y.copy()
    out = np.zeros((lams.size, p))
    history = np.empty(max_sweeps)
    for k in range(lams.size):
        coordinate_descent(X, r, beta, col_sq, lams[k], tol, max_sweeps, history)
        out[k] = beta
    return out
