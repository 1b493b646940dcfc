"""Simultaneous tests of ``H0: beta_G = 0`` built on a debiased fit.

Both statistics use the sandwich block ``Sigma_GG = [L^{-1} S L^{-T}]_GG``,
assembled from the ``g`` rows of the loading matrix only.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2, norm

from .exceptions import DegenerateError, DimensionError

COND_LIMIT = 1e12
DEFAULT_LEVELS = (0.01, 0.05, 0.10)


@dataclass(frozen=True)
class GroupTest:
    group: tuple
    statistic: float
    kind: str
    reference: str
    p_value: float
    p_value_two_sided: float
    n: int
    reject_at: dict = field(default_factory=dict)

    @property
    def g(self):
        return len(self.group)

    @property
    def gamma(self):
        """Group size relative to the sample size."""
        return self.g / self.n

    def reject(self, level=0.05):
        return bool(self.p_value < level)

    def to_dict(self):
        return {
            "group": [int(j) for j in self.group],
            "g": self.g,
            "gamma": self.gamma,
            "kind": self.kind,
            "reference": self.reference,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "p_value_two_sided": self.p_value_two_sided,
            "reject_at": {f"{k:g}": v for k, v in self.reject_at.items()},
        }


def _check_group(mf, G):
    G = np.atleast_1d(np.asarray(G))
    if G.size == 0:
        raise DimensionError("group is empty")
    if not np.issubdtype(G.dtype, np.integer):
        raise DimensionError("group indices must be integers")
    G = G.astype(np.intp)
    if np.unique(G).size != G.size:
        raise DimensionError("group has repeated indices")
    if G.min() < 0 or G.max() >= mf.p:
        raise DimensionError(f"group index outside 0..{mf.p - 1}")
    if G.size >= mf.n:
        raise DimensionError(f"group size {G.size} must be smaller than n={mf.n}")
    return G


def _scale(mf, sigma):
    s = mf.sigma_hat if sigma is None else float(sigma)
    if not s > 0:
        raise DegenerateError("noise scale is zero; group tests undefined")
    return s


def _decisions(p, levels):
    return {float(a): bool(p < a) for a in levels}


def wald_w1(mf, G, sigma=None, levels=DEFAULT_LEVELS):
    """Hotelling-type Wald statistic ``n b' Sigma_GG^{-1} b / sigma^2``,
    referred to chi-square with ``g`` degrees of freedom."""
    G = _check_group(mf, G)
    s = _scale(mf, sigma)
    block = mf.sandwich_block(G)
    cond = np.linalg.cond(block)
    if not cond < COND_LIMIT:
        raise DegenerateError(
            f"Sigma_GG is numerically singular (condition {cond:.3g}); use wbs instead")
    b = mf.beta_tilde[G]
    stat = float(mf.n * b @ np.linalg.solve(block, b) / s ** 2)
    stat = max(stat, 0.0)
    p = float(chi2.sf(stat, df=G.size))
    return GroupTest(tuple(G.tolist()), stat, "w1", f"chi2({G.size})", p, p, mf.n,
                     _decisions(p, levels))


def wald_wbs(mf, G, sigma=None, levels=DEFAULT_LEVELS):
    """Trace-normalized statistic
    ``(n b'b - sigma^2 tr Sigma_GG) / (sigma^2 sqrt(2 tr Sigma_GG^2))``,
    one-sided against the standard normal."""
    G = _check_group(mf, G)
    s2 = _scale(mf, sigma) ** 2
    block = mf.sandwich_block(G)
    tr1 = float(np.trace(block))
    tr2 = float(np.sum(block * block))  # tr(B^2) for symmetric B
    if not tr2 > 0:
        raise DegenerateError("tr(Sigma_GG^2) is zero; the group carries no variance")
    b = mf.beta_tilde[G]
    stat = float((mf.n * b @ b - s2 * tr1) / (s2 * np.sqrt(2.0 * tr2)))
    p = float(norm.sf(stat))
    p2 = float(2.0 * norm.sf(abs(stat)))
    return GroupTest(tuple(G.tolist()), stat, "wbs", "normal", p, p2, mf.n,
                     _decisions(p, levels))


def group_test(mf, G, kind="wbs", sigma=None, levels=DEFAULT_LEVELS):
    """Run ``kind`` in {"w1", "wbs", "both"}; ``both`` returns a list."""
    kind = kind.lower()
    if kind == "w1":
        return wald_w1(mf, G, sigma, levels)
    if kind == "wbs":
        return wald_wbs(mf, G, sigma, levels)
    if kind == "both":
        return [wald_w1(mf, G, sigma, levels), wald_wbs(mf, G, sigma, levels)]
    raise ValueError(f"unknown test kind {kind!r}")
