"""Debiasing stage: the contraction-expansion estimator, its sandwich
covariance, confidence intervals and linear contrasts."""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .exceptions import DimensionError
from .lasso import subgradient_kappa
from .linalg import build_ridge_block_factor

CROSS_CHECK_TOL = 1e-10


@dataclass(frozen=True)
class Contrast:
    d: np.ndarray

    @property
    def support_size(self):
        return int(np.count_nonzero(self.d))


def make_contrast(d, m=None, n=None):
    """Validate a unit-norm contrast with at most ``m`` nonzeros.

    ``m`` defaults to ``n // 2`` when ``n`` is given.
    """
    d = np.asarray(d, dtype=float).ravel()
    if abs(np.linalg.norm(d) - 1.0) > 1e-10:
        raise ValueError("contrast must have unit Euclidean norm")
    if m is None and n is not None:
        m = n // 2
    if m is not None and np.count_nonzero(d) > m:
        raise ValueError(f"contrast support {np.count_nonzero(d)} exceeds cap {m}")
    return Contrast(d)


@dataclass
class MoceFit:
    """Debiased coefficients with access to the sandwich covariance.

    ``loadings`` holds ``L^{-1} X'`` (p x n), so the sandwich matrix
    ``L^{-1} S L^{-T}`` equals ``loadings @ loadings.T / n`` and is never
    materialized.
    """

    beta_tilde: np.ndarray
    beta_hat: np.ndarray
    lam: float
    kappa: np.ndarray
    expanded: object
    sigma_hat: float
    n: int
    factor: object = field(repr=False)
    loadings: np.ndarray = field(repr=False)

    @property
    def p(self):
        return self.beta_tilde.size

    @property
    def sandwich_diag(self):
        return (self.loadings ** 2).sum(axis=1) / self.n

    @property
    def se(self):
        return self.sigma_hat * np.sqrt(self.sandwich_diag / self.n)

    @property
    def zero_variance(self):
        d = self.sandwich_diag
        return d <= np.finfo(float).eps * max(d.max(initial=0.0), 1.0)

    def sandwich_block(self, G):
        G = np.asarray(G, dtype=np.intp)
        rows = self.loadings[G]
        return rows @ rows.T / self.n

    def contrast_variance(self, d):
        d = getattr(d, "d", d)
        v = self.loadings.T @ np.asarray(d, dtype=float)
        return self.sigma_hat ** 2 * (v @ v) / self.n


def blockwise_estimate(beta_hat, lam, kappa, factor):
    """Expanded-block and complement-block estimators computed separately."""
    A, C = factor.expanded_indices, factor.complement_indices
    corr_a = factor.solve_aa(lam * kappa[A])
    corr_c = factor.solve_cc(lam * kappa[C]) - factor.solve_cc(factor.s_ca(corr_a))
    out = np.array(beta_hat, dtype=float)
    out[A] += corr_a
    out[C] += corr_c
    return out


def moce_fit(data, fit, expanded, sigma=None, cross_check=True):
    """Debias a LASSO fit on the given expanded model.

    ``sigma`` overrides the residual-based scale estimate.
    """
    if expanded.indices.max(initial=-1) >= data.p:
        raise DimensionError("expanded model does not match the data dimension")
    # a zero lambda only arises for a constant response (lambda_max = 0)
    kappa = subgradient_kappa(data, fit) if fit.lam > 0 else np.zeros(data.p)
    factor = build_ridge_block_factor(data.X, expanded.indices,
                                      expanded.tau_a, expanded.tau_c)
    beta_tilde = fit.beta + factor.apply_inverse(fit.lam * kappa)
    if cross_check:
        other = blockwise_estimate(fit.beta, fit.lam, kappa, factor)
        gap = np.abs(other - beta_tilde).max() / max(np.abs(beta_tilde).max(), 1.0)
        if gap > CROSS_CHECK_TOL:
            raise ArithmeticError(f"blockwise and combined estimates differ by {gap:.3g}")
    loadings = factor.apply_inverse(np.asarray(data.X.T))
    return MoceFit(beta_tilde, fit.beta.copy(), fit.lam, kappa, expanded,
                   fit.sigma_hat if sigma is None else float(sigma),
                   data.n, factor, loadings)


def moce_covariance(mf, targets):
    """Variance ``sigma^2 d' L^{-1} S L^{-T} d`` of ``sqrt(n) d' beta_tilde``.

    ``targets`` is an index array (one value per index) or a ``Contrast``.
    """
    if isinstance(targets, Contrast):
        return mf.contrast_variance(targets)
    idx = np.asarray(targets, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= mf.p):
        raise DimensionError("target index out of range")
    return mf.sigma_hat ** 2 * mf.sandwich_diag[idx]


def z_value(level):
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    return float(norm.ppf(0.5 + level / 2.0))


@dataclass
class Intervals:
    estimate: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    degenerate: np.ndarray

    @property
    def half_width(self):
        return self.upper - self.estimate


def confidence_intervals(mf, level=0.95):
    """Per-coordinate normal intervals; zero-variance coordinates collapse to
    points and are flagged."""
    z = z_value(level)
    se = mf.se.copy()
    degenerate = mf.zero_variance
    se[degenerate] = 0.0
    est = mf.beta_tilde
    return Intervals(est, se, est - z * se, est + z * se, level, degenerate)


@dataclass
class ContrastResult:
    estimate: float
    se: float
    lower: float
    upper: float
    level: float
    degenerate: bool


def linear_contrast(mf, d, level=0.95, m=None):
    if not isinstance(d, Contrast):
        d = make_contrast(d, m=m, n=mf.n)
    if d.d.size != mf.p:
        raise DimensionError("contrast length does not match the number of predictors")
    z = z_value(level)
    est = float(d.d @ mf.beta_tilde)
    v2 = mf.contrast_variance(d)
    degenerate = not v2 > 0
    se = float(np.sqrt(v2 / mf.n)) if not degenerate else 0.0
    return ContrastResult(est, se, est - z * se, est + z * se, level, degenerate)


def remainders(mf, beta_star):
    """Bias remainders on the expanded block and its complement.

    With ``delta = beta_hat - beta*``, ``(r_a, r_c) = L^{-1} (L - S) delta``;
    then ``beta_tilde - beta* = L^{-1} X' eps / n + (r_a, r_c)``.
    """
    f = mf.factor
    A, C = f.expanded_indices, f.complement_indices
    delta = mf.beta_hat - np.asarray(beta_star, dtype=float)
    r_a = f.solve_aa(f.tau_a * delta[A] - f.s_ac(delta[C]))
    r_c = f.solve_cc(f.tau_c * delta[C] - f.s_ca(r_a))
    return r_a, r_c
