"""Exception types raised across the package."""


class QepcError(Exception):
    """Base class for all errors raised by qepc."""


class NotHermitianError(QepcError, ValueError):
    pass


class NotPSDError(QepcError, ValueError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class DimensionMismatch(QepcError, ValueError):
    pass


class InvalidChannelError(QepcError, ValueError):
    pass


class InvalidStateError(QepcError, ValueError):
    pass


class IllConditionedError(QepcError, ArithmeticError):
    """A result that holds exactly in theory failed numerically."""


class SolverIndeterminate(QepcError, RuntimeError):
    """The SDP solver stopped without a certified answer.

    The best iterate is carried on ``solution`` so callers can inspect it.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class NoSignChange(QepcError, ValueError):
    pass


class AmbiguousCrossover(QepcError, ValueError):
    """More than one sign change where exactly one was required."""


class ClassificationMismatch(SolverIndeterminate):
    """The analytic and SDP routes disagree away from the feasibility boundary."""
