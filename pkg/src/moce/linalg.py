"""Dense kernels for the ridge block system.

The debiasing step works with the block lower-triangular matrix

    L = [[S_AA + tau_a I, 0              ],
         [S_CA,           S_CC + tau_c I]]

where ``A`` is the expanded index set, ``C`` its complement and
``S = X'X / n``.  The complement block is never formed: its inverse is applied
through the n x n Woodbury core ``n tau_c I_n + X_C X_C'``.
"""

from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import DimensionError, SizeError

RE_MAX_P = 20
RE_MAX_S = 5


class SpectrumBounds(NamedTuple):
    rho_min: float
    rho_max: float
    rank: int


class REDiagnostic(NamedTuple):
    re_lower_bound: float
    se_min: float
    se_max: float
    heuristic: bool = True


def _rank_tol(shape, sigma_max):
    return max(shape) * np.finfo(float).eps * sigma_max


def extreme_singular_values(M):
    """Smallest nonzero and largest singular values of a symmetric PSD matrix.

    Values at or below ``max(shape) * eps * sigma_max`` count as zero.  An
    all-zero input gives ``SpectrumBounds(0.0, 0.0, 0)``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if M.size == 0:
        return SpectrumBounds(0.0, 0.0, 0)
    sym = 0.5 * (M + M.T)
    sv = np.abs(np.linalg.eigvalsh(sym))
    top = sv.max()
    if top == 0.0:
        return SpectrumBounds(0.0, 0.0, 0)
    nonzero = sv[sv > _rank_tol(M.shape, top)]
    return SpectrumBounds(float(nonzero.min()), float(top), int(nonzero.size))


def gram_spectrum(X_block):
    """``extreme_singular_values`` of ``X_block' X_block / n`` without forming
    the (possibly wide) Gram matrix."""
    X_block = np.asarray(X_block, dtype=float)
    n, k = X_block.shape
    if k == 0:
        return SpectrumBounds(0.0, 0.0, 0)
    sv = np.linalg.svd(X_block, compute_uv=False) ** 2 / n
    top = sv.max() if sv.size else 0.0
    if top == 0.0:
        return SpectrumBounds(0.0, 0.0, 0)
    nonzero = sv[sv > _rank_tol((k, k), top)]
    return SpectrumBounds(float(nonzero.min()), float(top), int(nonzero.size))


class RidgeBlockFactor:
    """Cached factorizations for applying ``L^{-1}``, ``L^{-T}`` and ``L``.

    Vectors passed to the ``apply_*`` methods may be 1-D of length ``p`` or
    2-D with ``p`` rows; each column is treated separately.
    """

    def __init__(self, X, expanded, tau_a, tau_c):
        X = np.asarray(X, dtype=float)
        n, p = X.shape
        idx = np.asarray(expanded, dtype=np.intp).ravel()
        if idx.size == 0:
            raise DimensionError("expanded set must be non-empty")
        if np.unique(idx).size != idx.size:
            raise DimensionError("expanded set has duplicate indices")
        if idx.min() < 0 or idx.max() >= p:
            raise DimensionError("expanded index out of range")
        if idx.size >= n:
            raise DimensionError(
                f"expanded size {idx.size} must be smaller than n={n}")
        if not (tau_a > 0 and tau_c > 0):
            raise ValueError("tau_a and tau_c must be positive")
        if not np.all(np.isfinite(X)):
            raise ValueError("design has non-finite entries")

        mask = np.zeros(p, dtype=bool)
        mask[idx] = True
        self.n, self.p = n, p
        self.expanded_indices = idx
        self.complement_indices = np.flatnonzero(~mask)
        self.tau_a = float(tau_a)
        self.tau_c = float(tau_c)

        self._Xa = X[:, idx]
        self._Xc = X[:, self.complement_indices]
        gram_a = self._Xa.T @ self._Xa / n
        gram_a[np.diag_indices_from(gram_a)] += self.tau_a
        self._chol_a = cho_factor(gram_a, lower=True)
        if self._Xc.shape[1]:
            core = self._Xc @ self._Xc.T
            core[np.diag_indices_from(core)] += n * self.tau_c
            self._chol_core = cho_factor(core, lower=True)
        else:
            self._chol_core = None

    @property
    def a_tilde(self):
        return self.expanded_indices.size

    # block pieces -------------------------------------------------------

    def solve_aa(self, v):
        """Apply ``(S_AA + tau_a I)^{-1}``."""
        return cho_solve(self._chol_a, v)

    def solve_cc(self, v):
        """Apply ``(S_CC + tau_c I)^{-1}`` via the Woodbury identity."""
        if self._chol_core is None:
            return np.array(v, dtype=float)
        inner = cho_solve(self._chol_core, self._Xc @ v)
        return (v - self._Xc.T @ inner) / self.tau_c

    def s_ca(self, v_a):
        return self._Xc.T @ (self._Xa @ v_a) / self.n

    def s_ac(self, v_c):
        return self._Xa.T @ (self._Xc @ v_c) / self.n

    # full operators -----------------------------------------------------

    def _split(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.p:
            raise DimensionError(f"expected leading dimension {self.p}, got {v.shape[0]}")
        return v, v[self.expanded_indices], v[self.complement_indices]

    def _join(self, like, part_a, part_c):
        out = np.empty_like(like, dtype=float)
        out[self.expanded_indices] = part_a
        out[self.complement_indices] = part_c
        return out

    def apply_inverse(self, v):
        """``L^{-1} v``."""
        v, va, vc = self._split(v)
        wa = self.solve_aa(va)
        wc = self.solve_cc(vc - self.s_ca(wa))
        return self._join(v, wa, wc)

    def apply_inverse_transpose(self, v):
        """``L^{-T} v``."""
        v, va, vc = self._split(v)
        uc = self.solve_cc(vc)
        ua = self.solve_aa(va - self.s_ac(uc))
        return self._join(v, ua, uc)

    def apply(self, v):
        """``L v``."""
        v, va, vc = self._split(v)
        top = self._Xa.T @ (self._Xa @ va) / self.n + self.tau_a * va
        bottom = (self.s_ca(va) + self._Xc.T @ (self._Xc @ vc) / self.n
                  + self.tau_c * vc)
        return self._join(v, top, bottom)

    def dense_inverse(self):
        """Assemble ``L^{-1}`` as a dense p x p array (testing and small p only)."""
        return self.apply_inverse(np.eye(self.p))


def build_ridge_block_factor(X, expanded, tau_a, tau_c):
    return RidgeBlockFactor(X, expanded, tau_a, tau_c)


def _project_l1_ball(v, radius):
    # Duchi et al. sort-based projection
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u * k > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _cone_rayleigh_min(S, J, k, iters=60):
    Jc = np.setdiff1d(np.arange(S.shape[0]), J)
    w, V = np.linalg.eigh(S[np.ix_(J, J)])
    nu = np.zeros(S.shape[0])
    nu[J] = V[:, 0]
    best = w[0]
    if Jc.size == 0:
        return best
    step = 1.0 / max(np.linalg.eigvalsh(S)[-1], 1e-12)
    for _ in range(iters):
        q = nu @ S @ nu
        nu = nu - step * (S @ nu - q * nu)
        nu[Jc] = _project_l1_ball(nu[Jc], k * np.abs(nu[J]).sum())
        norm = np.linalg.norm(nu)
        if norm == 0:
            break
        nu /= norm
        best = min(best, nu @ S @ nu)
    return best


def diagnose_re_se(X, s, k=3.0):
    """Sparse-eigenvalue bounds by enumeration, plus a heuristic RE value.

    ``se_min``/``se_max`` are exact over all supports of size <= s.  The RE
    figure is the smallest Rayleigh quotient found by projected descent inside
    each support's cone, so it is not a certified bound (flag ``heuristic``).
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p > RE_MAX_P or s > RE_MAX_S:
        raise SizeError(f"enumeration limited to p <= {RE_MAX_P}, s <= {RE_MAX_S}")
    if s < 1 or k < 1:
        raise ValueError("need s >= 1 and k >= 1")
    s = min(s, p)
    S = X.T @ X / n
    se_min, se_max = np.inf, -np.inf
    re = np.inf
    for size in range(1, s + 1):
        for J in combinations(range(p), size):
            J = np.array(J)
            ev = np.linalg.eigvalsh(S[np.ix_(J, J)])
            se_min = min(se_min, ev[0])
            se_max = max(se_max, ev[-1])
            if size == s:
                re = min(re, _cone_rayleigh_min(S, J, k))
    if se_min <= _rank_tol((n, p), se_max):
        se_min = 0.0
    re = min(re, se_min)
    return REDiagnostic(max(float(re), 0.0), float(se_min), float(se_max), True)
