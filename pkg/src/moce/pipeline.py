"""End-to-end fit: LASSO (cross-validated or fixed lambda), model expansion and
debiasing, on an already standardized ``Dataset``."""

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .debias import moce_fit
from .expand import DEFAULT_C, ExpandedModel, build_expanded_model, lambda_a, lambda_s, select_tau
from .lasso import (GRID_SIZE, LassoFit, cross_validate, fit_lasso, lambda_max, lasso_path,
                    relative_tol)


@dataclass
class PipelineResult:
    path: object
    lasso: LassoFit
    expanded: ExpandedModel
    moce: object
    cv_used: bool

    @property
    def degenerate(self):
        """True when the response is constant and nothing could be estimated."""
        return self.lasso.lam == 0.0


def _constant_response(data, C, seed):
    # lambda_max = 0: every coefficient is zero at every lambda.  Treated like
    # the lambda_a >= lambda_max branch: a one-predictor expanded model.
    warnings.warn("response is constant after centering; all estimates are zero",
                  stacklevel=3)
    n, p = data.n, data.p
    lam_s = lambda_s(max(p, 2), n)
    idx = np.array([0], dtype=np.intp)
    tau = select_tau(data.X, idx, max(p, 2), n)
    empty = np.empty(0, dtype=np.intp)
    expanded = ExpandedModel(idx, lam_s, lambda_a(0, n, max(p, 2), C), tau.tau_a, tau.tau_c,
                             idx, empty, empty, empty, int(seed), False, tau.degenerate)
    fit = LassoFit(np.zeros(p), 0.0, np.zeros(p), 0.0, True, 0, np.empty(0), True)
    return fit, expanded


def run_moce(data, lam=None, cv_folds=10, C=DEFAULT_C, seed=0, grid_size=GRID_SIZE,
             tau_a=None, tau_c=None, sigma=None):
    """Fit the full procedure.

    ``lam=None`` selects lambda by ``cv_folds``-fold cross-validation (fold
    assignment seeded by ``seed``); ``seed`` also drives noise injection.
    ``tau_a``/``tau_c`` override the default ridge scalars.
    """
    if lambda_max(data) <= 0:
        fit, expanded = _constant_response(data, C, seed)
        path = None
        cv_used = False
    else:
        path = lasso_path(data, grid_size=grid_size, tol=relative_tol(data.y))
        cv_used = lam is None
        if cv_used:
            lam = cross_validate(data, cv_folds, path, seed=seed)
        fit = fit_lasso(data, float(lam), warm_start=_warm(path, lam))
        expanded = build_expanded_model(path, fit, data, C=C, seed=seed)
    if tau_a is not None or tau_c is not None:
        expanded = dataclasses.replace(
            expanded,
            tau_a=expanded.tau_a if tau_a is None else float(tau_a),
            tau_c=expanded.tau_c if tau_c is None else float(tau_c))
    mf = moce_fit(data, fit, expanded, sigma=sigma)
    return PipelineResult(path, fit, expanded, mf, cv_used)


def _warm(path, lam):
    k = int(np.searchsorted(-path.lambda_grid, -lam, side="right")) - 1
    return path.betas[k] if k >= 0 else None
