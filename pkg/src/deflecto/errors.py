"""Exception hierarchy shared by the library and the command line."""


class DeflectoError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(DeflectoError, ValueError):
    """A parameter or input violates a documented precondition."""


class NumericalFailure(DeflectoError, ArithmeticError):
    """An iterative method produced non-finite iterates."""


class CalibrationUndefined(DeflectoError):
    """The rotation center cannot be estimated from a flat trace."""
