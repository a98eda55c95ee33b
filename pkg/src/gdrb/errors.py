"""Exception hierarchy shared across the package.

The CLI maps :class:`ValidationError` to exit code 1 and
:class:`NumericalError` to exit code 2.
"""


class RBError(Exception):
    """Base class for all package errors."""


class ValidationError(RBError, ValueError):
    """Bad input: shapes, ranges, unknown configuration keys."""


class UnsupportedDimensionError(ValidationError):
    pass


class CapExceededError(ValidationError):
    """Exhaustive enumeration would exceed the sequence-count cap."""


class GroupConstructionError(RBError):
    pass


class NumericalError(RBError, ArithmeticError):
    """A computation ran but its result cannot be trusted."""


class DegenerateSpectrumError(NumericalError):
    """Dominant eigenvalue is complex or tied, so the decomposition is ambiguous."""


class NormalizationError(NumericalError):
    pass


class GaugeError(NumericalError):
    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class BoundVacuousError(NumericalError):
    """The small-perturbation bound has a non-positive denominator."""


class FitError(NumericalError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])
