"""Model expansion: thresholds, expanded-model size, noise injection and the
ridge scalars for the two blocks."""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lasso import fit_lasso
from .linalg import gram_spectrum

DEFAULT_C = 8.0
RNG_NAME = "numpy.random.Philox(key=seed)"


def injection_rng(seed):
    """Counter-based generator used for noise injection."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


def lambda_s(p, n):
    """Expansion threshold ``sqrt(2 log p) / n``."""
    if p < 2:
        raise ValueError("lambda_s needs p >= 2")
    if n < 1:
        raise ValueError("n must be positive")
    return math.sqrt(2.0 * math.log(p)) / n


def lambda_a(a_hat, n, p, C=DEFAULT_C):
    """Hard threshold ``C * min(1 / sqrt(a_hat n), lambda_s)``.

    With an empty selection the first arm is undefined and ``C * lambda_s`` is
    returned.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if not 4.0 <= C <= 12.0:
        warnings.warn(f"C={C} is outside the usual range [4, 12]", stacklevel=2)
    ls = lambda_s(p, n)
    if a_hat <= 0:
        return C * ls
    return C * min(1.0 / math.sqrt(a_hat * n), ls)


def expanded_size(n, lam_a, lam_max):
    """``floor(n (1 - lam_a / lam_max))`` clamped to ``[1, n - 1]``."""
    if not lam_max > 0:
        raise ValueError("lambda_max must be positive")
    if lam_a >= lam_max:
        warnings.warn("lambda_a >= lambda_max; expanded model reduced to one predictor",
                      stacklevel=2)
        return 1
    raw = math.floor(n * (1.0 - lam_a / lam_max) + 1e-9)
    return int(min(max(raw, 1), n - 1))


class TauChoice(NamedTuple):
    tau_a: float
    tau_c: float
    degenerate: bool


def select_tau(X, expanded, p=None, n=None):
    """Ridge scalars ``tau_a = 1e-8 sqrt(log p) / n`` and
    ``tau_c = 1e-4 sqrt(rho_max(S_AA) rho_max(S_CC))``.

    Falls back to ``tau_c = 1e-4`` (flagged) when either block is zero.
    """
    X = np.asarray(X, dtype=float)
    n_, p_ = X.shape
    p = p_ if p is None else p
    n = n_ if n is None else n
    idx = np.asarray(expanded, dtype=np.intp)
    mask = np.zeros(p_, dtype=bool)
    mask[idx] = True
    tau_a = 1e-8 * math.sqrt(math.log(p)) / n
    rho_a = gram_spectrum(X[:, mask]).rho_max
    rho_c = gram_spectrum(X[:, ~mask]).rho_max
    if rho_a == 0.0 or rho_c == 0.0:
        return TauChoice(tau_a, 1e-4, True)
    return TauChoice(tau_a, 1e-4 * math.sqrt(rho_a * rho_c), False)


@dataclass(frozen=True)
class ExpandedModel:
    """Expanded index set and the tuning values that produced it.

    ``deterministic`` is the union of the LASSO selection and the support at
    ``lambda_a``; ``injected`` are the random draws from predictors that are
    zero at ``lambda_s``; ``filled`` are entry-order fill-ins used only when
    there are too few such predictors.
    """

    indices: np.ndarray
    lambda_s: float
    lambda_a: float
    tau_a: float
    tau_c: float
    deterministic: np.ndarray
    injected: np.ndarray
    filled: np.ndarray
    selected_at_lambda_s: np.ndarray
    seed: int
    truncated: bool = False
    tau_degenerate: bool = False
    rng: str = RNG_NAME

    @property
    def a_tilde(self):
        return int(self.indices.size)

    def complement(self, p):
        return np.setdiff1d(np.arange(p), self.indices)

    def false_negatives(self, support):
        """Signals left outside the expanded model."""
        return np.setdiff1d(np.asarray(support, dtype=np.intp), self.indices)

    def true_negatives(self, support, p):
        """Null predictors left outside the expanded model."""
        return np.setdiff1d(self.complement(p), support)


def signal_set(beta_star, sigma, lam_s):
    """Indices with ``|beta*_j| > lam_s sigma`` (known only in simulation)."""
    return np.flatnonzero(np.abs(beta_star) > lam_s * sigma)


def cumulative_signal_factor(beta_star, sigma, lam_s):
    """Smallest integer ``a*`` with ``sum_j min(|beta*_j|, t) <= a* t``, ``t = lam_s sigma``."""
    t = lam_s * sigma
    total = np.minimum(np.abs(beta_star), t).sum()
    return int(math.ceil(total / t - 1e-12))


def _fit_at(data, path, lam):
    # warm start from the last grid point with lambda >= lam
    grid = path.lambda_grid
    k = int(np.searchsorted(-grid, -lam, side="right")) - 1
    warm = path.betas[k] if k >= 0 else None
    return fit_lasso(data, lam, warm_start=warm)


def build_expanded_model(path, fit, data, C=DEFAULT_C, seed=0, a_tilde=None):
    """Construct the expanded model around a LASSO fit.

    ``a_tilde`` overrides the size rule when given.
    """
    n, p = data.n, data.p
    lam_s = lambda_s(p, n)
    lam_a = lambda_a(fit.a_hat, n, p, C)
    if a_tilde is None:
        a_tilde = min(expanded_size(n, lam_a, path.lambda_max), p)
    if not 1 <= a_tilde <= min(n - 1, p):
        raise ValueError(f"expanded size {a_tilde} outside [1, min(n-1, p)]")

    support_a = fit_lasso(data, lam_a).active_set if lam_a >= path.lambda_max \
        else _fit_at(data, path, lam_a).active_set
    selected_s = _fit_at(data, path, lam_s).active_set
    det = np.union1d(support_a, fit.active_set)

    rank = np.empty(p, dtype=np.intp)
    rank[path.entry_order] = np.arange(p)
    truncated = det.size > a_tilde
    injected = filled = np.empty(0, dtype=np.intp)
    if truncated:
        det = det[np.argsort(rank[det], kind="stable")][:a_tilde]
        chosen = det
    else:
        need = a_tilde - det.size
        pool = np.setdiff1d(np.setdiff1d(np.arange(p), selected_s), det)
        rng = injection_rng(seed)
        if pool.size >= need:
            injected = np.sort(rng.choice(pool, size=need, replace=False))
        else:
            injected = pool
            rest = np.setdiff1d(np.setdiff1d(np.arange(p), det), pool)
            rest = rest[np.argsort(rank[rest], kind="stable")]
            filled = np.sort(rest[:need - pool.size])
        chosen = np.concatenate([det, injected, filled])

    indices = np.sort(chosen).astype(np.intp)
    tau = select_tau(data.X, indices, p, n)
    return ExpandedModel(
        indices=indices, lambda_s=lam_s, lambda_a=lam_a, tau_a=tau.tau_a,
        tau_c=tau.tau_c, deterministic=np.sort(det).astype(np.intp),
        injected=injected.astype(np.intp), filled=filled.astype(np.intp),
        selected_at_lambda_s=selected_s, seed=int(seed), truncated=bool(truncated),
        tau_degenerate=tau.degenerate)
