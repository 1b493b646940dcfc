"""LASSO contraction stage: standardization, coordinate descent, solution
paths, cross-validation, KKT subgradient and residual variance."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _cd
from .exceptions import DegenerateError, DimensionError, KKTViolationError

KAPPA_TOL = 1e-6
DEFAULT_TOL = 1e-7
MAX_SWEEPS = 10_000
GRID_SIZE = 100
GRID_RATIO = 1e-3
PATH_THRESH = 1e-7


@dataclass(frozen=True)
class Dataset:
    """Centered design and response.

    ``scale="variance"`` gives columns with ``||x_j||^2 / n = 1`` (so the
    diagonal of ``S = X'X/n`` is one); ``scale="norm"`` gives unit Euclidean
    norm.  ``kept`` maps working columns back to raw column positions.
    """

    X: np.ndarray
    y: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    kept: np.ndarray
    p_raw: int
    scale: str = "variance"

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def dropped(self):
        return np.setdiff1d(np.arange(self.p_raw), self.kept)

    @classmethod
    def from_arrays(cls, X, y):
        """Wrap arrays as-is (no centering or scaling)."""
        X = np.asfortranarray(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.size:
            raise DimensionError("X must be n x p and y length n")
        p = X.shape[1]
        return cls(X, y, np.zeros(p), np.ones(p), 0.0, np.arange(p), p, "none")

    def subset_rows(self, rows):
        return Dataset.from_arrays(self.X[rows], self.y[rows])

    def to_raw_coef(self, beta):
        """Map standardized-scale coefficients to raw column units.

        Dropped constant columns get NaN.
        """
        beta = np.asarray(beta, dtype=float)
        out = np.full(beta.shape[:-1] + (self.p_raw,), np.nan)
        out[..., self.kept] = beta * self.x_scale
        return out

    def from_raw_coef(self, raw):
        raw = np.asarray(raw, dtype=float)
        return raw[..., self.kept] / self.x_scale


def standardize(raw_X, raw_y, scale="variance"):
    """Center columns and response, scale columns, drop constant columns."""
    X = np.asarray(raw_X, dtype=float)
    y = np.asarray(raw_y, dtype=float).ravel()
    if X.ndim != 2:
        raise DimensionError("X must be two-dimensional")
    n, p_raw = X.shape
    if y.size != n:
        raise DimensionError(f"X has {n} rows but y has {y.size} entries")
    if n < 2:
        raise DimensionError("need at least two observations")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("inputs contain NaN or Inf")
    if scale not in ("variance", "norm"):
        raise ValueError(f"unknown scale {scale!r}")

    x_mean = X.mean(axis=0)
    Xc = X - x_mean
    norms = np.sqrt((Xc ** 2).sum(axis=0))
    ref = np.maximum(np.abs(X).max(axis=0), 1.0)
    constant = norms <= 1e-12 * ref * np.sqrt(n)
    if constant.all():
        raise DimensionError("all columns are constant")
    if constant.any():
        warnings.warn(f"dropping constant columns {np.flatnonzero(constant).tolist()}",
                      stacklevel=2)
    kept = np.flatnonzero(~constant)
    target = np.sqrt(n) if scale == "variance" else 1.0
    x_scale = target / norms[kept]
    Xs = np.asfortranarray(Xc[:, kept] * x_scale)
    y_mean = float(y.mean())
    return Dataset(Xs, y - y_mean, x_mean[kept], x_scale, y_mean, kept, p_raw, scale)


@dataclass
class LassoFit:
    beta: np.ndarray
    lam: float
    kappa: np.ndarray
    sigma_hat: float
    converged: bool
    iterations: int
    objective_history: np.ndarray = field(repr=False)
    sigma_degenerate: bool = False

    @property
    def active_set(self):
        return np.flatnonzero(self.beta)

    @property
    def a_hat(self):
        return int(np.count_nonzero(self.beta))


@dataclass
class LassoPath:
    """``entry_index[j]`` is the first grid position where predictor j is
    nonzero (``len(grid)`` if never); ``entry_order`` ranks predictors by it,
    ties broken by marginal correlation."""

    lambda_grid: np.ndarray
    betas: np.ndarray
    entry_index: np.ndarray
    entry_order: np.ndarray

    @property
    def lambda_max(self):
        return float(self.lambda_grid[0])


def objective(data, beta, lam):
    r = data.y - data.X @ beta
    return 0.5 * r @ r / data.n + lam * np.abs(beta).sum()


def _column_sq(X):
    return (X ** 2).sum(axis=0) / X.shape[0]


def _kkt_violation(grad, beta, lam):
    # in units of lam
    active = beta != 0
    v = np.zeros_like(grad)
    v[active] = np.abs(grad[active] - lam * np.sign(beta[active]))
    v[~active] = np.maximum(np.abs(grad[~active]) - lam, 0.0)
    return float(v.max(initial=0.0)) / lam


def fit_lasso(data, lam, warm_start=None, tol=DEFAULT_TOL, max_sweeps=MAX_SWEEPS,
              kkt_tol=1e-8):
    """Coordinate-descent LASSO at a single ``lam``.

    After the coefficient-change criterion is met, sweeps continue with a
    tighter tolerance until the KKT residual (relative to ``lam``) is below
    ``kkt_tol``, so the subgradient can be trusted at small ``lam``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    X = np.asfortranarray(data.X)
    n, p = X.shape
    beta = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=float)
    if beta.shape != (p,):
        raise DimensionError("warm start has wrong length")
    r = data.y - X @ beta
    col_sq = _column_sq(X)
    history = np.empty(max_sweeps)
    used = 0
    histories = []
    converged = False
    for _ in range(6):
        budget = max_sweeps - used
        if budget <= 0:
            break
        sweeps, converged = _cd.coordinate_descent(
            X, r, beta, col_sq, float(lam), tol, budget, history)
        histories.append(history[:sweeps].copy())
        used += sweeps
        if not converged:
            break
        r = data.y - X @ beta  # drop accumulated rounding in the residual
        grad = X.T @ r / n
        if _kkt_violation(grad, beta, lam) <= kkt_tol:
            break
        tol /= 10.0

    kappa = _kappa_from_residual(X, r, lam, beta, strict=False)
    fit = LassoFit(beta, float(lam), kappa, 0.0, bool(converged), used,
                   np.concatenate(histories) if histories else np.empty(0))
    fit.sigma_hat = estimate_sigma(data, fit)
    fit.sigma_degenerate = fit.a_hat >= n
    return fit


def _kappa_from_residual(X, r, lam, beta, strict):
    kappa = X.T @ r / (X.shape[0] * lam)
    over = np.abs(kappa).max(initial=0.0) - 1.0
    if over > KAPPA_TOL and strict:
        raise KKTViolationError(
            f"subgradient exceeds 1 by {over:.3g}; solver tolerance too loose")
    if over <= KAPPA_TOL:
        kappa = np.clip(kappa, -1.0, 1.0)
    active = beta != 0
    kappa[active] = np.sign(beta[active])
    return kappa


def subgradient_kappa(data, fit):
    """``kappa = X'(y - X beta) / (n lam)``, clipped to [-1, 1] with exact signs
    on the active set.  Raises ``KKTViolationError`` when an entry exceeds one
    by more than 1e-6."""
    X = data.X
    r = data.y - X @ fit.beta
    raw = X.T @ r / (data.n * fit.lam)
    active = fit.beta != 0
    drift = np.abs(raw[active] - np.sign(fit.beta[active]))
    if drift.size and drift.max() > KAPPA_TOL:
        raise KKTViolationError(
            f"active-set subgradient off by {drift.max():.3g}; fit not converged")
    return _kappa_from_residual(X, r, fit.lam, fit.beta, strict=True)


def estimate_sigma(data, fit):
    """Residual scale ``sqrt(||y - X beta||^2 / (n - a_hat))``; the denominator
    is floored at 1 when ``a_hat >= n``."""
    r = data.y - data.X @ fit.beta
    denom = max(data.n - int(np.count_nonzero(fit.beta)), 1)
    return float(np.sqrt(r @ r / denom))


def lambda_max(data):
    return float(np.abs(data.X.T @ data.y).max() / data.n)


def lambda_grid(lam_max, grid_size=GRID_SIZE, ratio=GRID_RATIO):
    return np.geomspace(lam_max, lam_max * ratio, grid_size)


def relative_tol(y, thresh=PATH_THRESH):
    """Coefficient-change tolerance equivalent to stopping once
    ``max_j S_jj (delta beta_j)^2 < thresh * y'y / n`` (the usual path-solver
    criterion, looser than the absolute default at small lambda)."""
    y = np.asarray(y, dtype=float)
    return float(np.sqrt(thresh * (y @ y) / y.size)) or DEFAULT_TOL


def lasso_path(data, grid_size=GRID_SIZE, ratio=GRID_RATIO, tol=DEFAULT_TOL):
    """Warm-started path on a log grid from ``lambda_max`` down to
    ``ratio * lambda_max``.

    Pass ``tol=relative_tol(data.y)`` when the path only serves for warm starts
    and entry order; the default absolute tolerance is slow near the end of
    the grid.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    lmax = lambda_max(data)
    if lmax <= 0:
        raise DegenerateError("lambda_max is zero (response orthogonal to all columns)")
    grid = lambda_grid(lmax, grid_size, ratio)
    betas = _cd.path_fit(np.asfortranarray(data.X), data.y, grid, tol, MAX_SWEEPS)
    betas[0] = 0.0  # exact at lambda_max
    nz = betas != 0
    entry = np.where(nz.any(axis=0), nz.argmax(axis=0), grid_size)
    # ties broken by marginal correlation strength
    strength = np.abs(data.X.T @ data.y)
    order = np.lexsort((-strength, entry))
    return LassoPath(grid, betas, entry, order)


def cv_errors(data, folds, grid, seed=0, tol=None):
    """Mean held-out squared error for each grid value.

    ``tol=None`` uses ``relative_tol`` of each training response.
    """
    lams = np.asarray(getattr(grid, "lambda_grid", grid), dtype=float)
    n = data.n
    if folds < 2 or n < folds:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(perm, folds)
    if any(part.size == 0 for part in parts):
        raise ValueError("a fold has no rows")
    sse = np.zeros(lams.size)
    for test in parts:
        train = np.setdiff1d(perm, test)
        Xtr, ytr = data.X[train], data.y[train]
        xm, ym = Xtr.mean(axis=0), ytr.mean()
        yc = ytr - ym
        fold_tol = relative_tol(yc) if tol is None else tol
        betas = _cd.path_fit(np.asfortranarray(Xtr - xm), yc, lams, fold_tol,
                             MAX_SWEEPS)
        pred = ym + (data.X[test] - xm) @ betas.T
        sse += ((data.y[test, None] - pred) ** 2).sum(axis=0)
    return sse / n


def cross_validate(data, folds=10, grid=None, seed=0):
    """Grid value with the smallest mean cross-validated squared error."""
    if grid is None:
        grid = lasso_path(data, tol=relative_tol(data.y))
    lams = np.asarray(getattr(grid, "lambda_grid", grid), dtype=float)
    if lams.size == 1:
        return float(lams[0])
    errs = cv_errors(data, folds, lams, seed)
    return float(lams[int(np.argmin(errs))])
