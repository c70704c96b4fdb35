"""Exception hierarchy shared by all linedim modules."""


class LinedimError(Exception):
    """Base class for every error raised by linedim."""


class DomainError(LinedimError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConstructionError(LinedimError, ValueError):
    """A geometric object could not be built from the given data."""


class EmptyFamilyError(ConstructionError):
    pass


class CurvatureSingularityError(LinedimError, ArithmeticError):
    """The second derivative vanishes where a curvature is required."""


class HypothesisViolationError(LinedimError, ValueError):
    pass


class InsufficientScalesError(LinedimError, ValueError):
    pass


class NonConvergenceError(LinedimError, ArithmeticError):
    """An iteration did not reach its tolerance.

    Attributes
    ----------
    residuals : list of float
        Residual norm after each iteration.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class NoWitnessError(LinedimError):
    pass


class FormError(LinedimError, ValueError):
    pass


class ParseError(LinedimError, ValueError):
    """Malformed input file. ``lineno`` is 1-based, or None if unknown."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
