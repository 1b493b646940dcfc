"""Debiased high-dimensional linear regression with an expanded model and
block ridge corrections: confidence intervals, linear contrasts and group
tests."""

__version__ = "0.1.0"

from .debias import MoceFit, confidence_intervals, linear_contrast, make_contrast, moce_fit
from .estimator import MOCE
from .exceptions import (DegenerateError, DimensionError, KKTViolationError, MOCEError,
                         NotFittedError, SizeError)
from .expand import build_expanded_model
from .grouptest import group_test, wald_w1, wald_wbs
from .lasso import Dataset, cross_validate, fit_lasso, lasso_path, standardize
from .pipeline import run_moce

__all__ = [
    "MOCE", "MoceFit", "Dataset", "standardize", "fit_lasso", "lasso_path", "cross_validate",
    "build_expanded_model", "moce_fit", "confidence_intervals", "linear_contrast",
    "make_contrast", "wald_w1", "wald_wbs", "group_test", "run_moce",
    "MOCEError", "DimensionError", "SizeError", "KKTViolationError", "DegenerateError",
    "NotFittedError",
]
