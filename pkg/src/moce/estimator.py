"""scikit-learn style wrapper around the full procedure."""

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .debias import confidence_intervals, linear_contrast, make_contrast
from .exceptions import DimensionError
from .expand import DEFAULT_C
from .grouptest import group_test
from .lasso import GRID_SIZE, standardize
from .pipeline import run_moce


class MOCE(BaseEstimator, RegressorMixin):
    """Debiased LASSO with an expanded model and block ridge corrections.

    Parameters
    ----------
    lam : float or None
        LASSO penalty on the standardized scale; ``None`` picks it by
        cross-validation.
    cv_folds : int
        Folds used when ``lam`` is None.
    C : float
        Constant in the expansion threshold (usual range 4-12).
    level : float
        Default confidence level for intervals.
    scale : {"variance", "norm"}
        Column standardization: unit variance or unit Euclidean norm.
    grid_size : int
        Points on the LASSO path grid.
    tau_a, tau_c : float or None
        Overrides for the ridge scalars.
    random_state : int
        Seeds both the CV fold split and the noise injection.

    Attributes
    ----------
    coef_ : ndarray (n_features,)
        Debiased coefficients in raw column units (0 for constant columns).
    intercept_ : float
    lasso_coef_ : ndarray (n_features,)
    se_ : ndarray (n_features,)
        Standard errors in raw units (NaN for constant columns).
    expanded_ : ndarray
        Raw column indices of the expanded model.
    sigma_ : float
    lambda_ : float
    """

    def __init__(self, lam=None, cv_folds=10, C=DEFAULT_C, level=0.95, scale="variance",
                 grid_size=GRID_SIZE, tau_a=None, tau_c=None, random_state=0):
        self.lam = lam
        self.cv_folds = cv_folds
        self.C = C
        self.level = level
        self.scale = scale
        self.grid_size = grid_size
        self.tau_a = tau_a
        self.tau_c = tau_c
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True, ensure_min_samples=2,
                         ensure_min_features=2)
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lam must be positive")
        data = standardize(X, y, scale=self.scale)
        res = run_moce(data, lam=self.lam, cv_folds=self.cv_folds, C=self.C,
                       seed=int(self.random_state), grid_size=self.grid_size,
                       tau_a=self.tau_a, tau_c=self.tau_c)
        self.data_ = data
        self.result_ = res
        self.n_features_in_ = X.shape[1]

        self.coef_ = np.nan_to_num(data.to_raw_coef(res.moce.beta_tilde), nan=0.0)
        self.lasso_coef_ = np.nan_to_num(data.to_raw_coef(res.lasso.beta), nan=0.0)
        self.intercept_ = float(data.y_mean - data.x_mean @ self.coef_[data.kept])
        self.se_ = data.to_raw_coef(res.moce.se)
        self.expanded_ = data.kept[res.expanded.indices]
        self.sigma_ = res.moce.sigma_hat
        self.lambda_ = res.lasso.lam
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_ + self.intercept_

    def conf_int(self, level=None):
        """``(n_features, 2)`` array of interval bounds in raw units."""
        check_is_fitted(self, "coef_")
        ci = confidence_intervals(self.result_.moce, self.level if level is None else level)
        lo = self.data_.to_raw_coef(ci.lower)
        hi = self.data_.to_raw_coef(ci.upper)
        return np.column_stack([lo, hi])

    def _working_index(self, G):
        G = np.atleast_1d(np.asarray(G, dtype=np.intp))
        pos = np.full(self.n_features_in_, -1, dtype=np.intp)
        pos[self.data_.kept] = np.arange(self.data_.kept.size)
        if G.size and (G.min() < 0 or G.max() >= self.n_features_in_):
            raise DimensionError("group index out of range")
        if np.any(pos[G] < 0):
            raise DimensionError("group contains a constant (dropped) column")
        return pos[G]

    def group_test(self, G, kind="wbs", sigma=None):
        """Test ``beta_G = 0`` for 0-based raw column indices ``G``.

        Scale-free: the statistics are invariant to column rescaling.
        """
        check_is_fitted(self, "coef_")
        res = group_test(self.result_.moce, self._working_index(G), kind=kind, sigma=sigma)
        raw = tuple(int(j) for j in np.atleast_1d(G))
        if isinstance(res, list):
            return [dataclasses.replace(t, group=raw) for t in res]
        return dataclasses.replace(res, group=raw)

    def contrast(self, d, level=None):
        """Interval for ``d' beta`` on the standardized scale (``d`` unit norm,
        indexed by raw columns; constant columns must carry zero weight)."""
        check_is_fitted(self, "coef_")
        d = np.asarray(d, dtype=float).ravel()
        if d.size != self.n_features_in_:
            raise DimensionError("contrast length does not match the number of features")
        if np.any(d[self.data_.dropped] != 0):
            raise DimensionError("contrast puts weight on a constant column")
        c = make_contrast(d[self.data_.kept], n=self.data_.n)
        return linear_contrast(self.result_.moce, c, self.level if level is None else level)
