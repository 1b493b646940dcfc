"""Exception types raised by the moce package."""


class MOCEError(Exception):
    """Base class for package errors."""


class DimensionError(MOCEError, ValueError):
    """Inputs have incompatible or out-of-range shapes."""


class SizeError(DimensionError):
    """Problem is too large for an exhaustive diagnostic."""


class KKTViolationError(MOCEError, ArithmeticError):
    """A LASSO fit does not satisfy its optimality conditions closely enough."""


class DegenerateError(MOCEError, ArithmeticError):
    """A quantity needed for inference is zero or numerically singular."""


class NotFittedError(MOCEError, AttributeError):
    """Estimator method called before ``fit``."""
