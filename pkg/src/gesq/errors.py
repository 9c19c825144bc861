"""Exception and warning types shared across the package."""


class GesqError(Exception):
    """Base class for errors raised by gesq."""


class InvalidArgumentError(GesqError, ValueError):
    """An input violates a documented precondition (shape, symmetry, positivity...)."""


class NumericalFailure(GesqError, ArithmeticError):
    """A numerical routine produced a result outside its tolerance.

    The offending residual is kept on ``residual`` when it is known.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedDegenerateError(GesqError):
    """The input falls in a degenerate case that the routine does not handle."""


class HalfEigenvalueWarning(UserWarning):
    """Fewer symplectic eigenvalues equal to 1/2 than the lower bound requires."""
