"""Exception hierarchy shared by every module."""


class LocfpcaError(Exception):
    """Base class for library errors."""


class DimensionMismatchError(LocfpcaError, ValueError):
    """Two objects living in truncated spaces of different dimension."""


class AsymmetricOperatorError(LocfpcaError, ValueError):
    """A matrix that should be symmetric is not, within tolerance."""


class DomainError(LocfpcaError, ValueError):
    """An argument lies outside the domain of a function."""


class NumericalError(LocfpcaError, ArithmeticError):
    """Base class for failures that happen during a computation."""


class ConvergenceError(NumericalError):
    """An iterative method hit its iteration cap.

    Attributes
    ----------
    residual : float
        Size of whatever quantity failed to shrink below tolerance.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class QuadratureError(NumericalError):
    """Adaptive quadrature could not reach its tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class DegenerateEigenvalueError(NumericalError):
    """An eigenvalue is not separated from its neighbours by the gap tolerance."""


class NonDifferentiablePointError(DomainError):
    """A derivative was requested where the function has a kink."""


class AssumptionViolation(LocfpcaError, ValueError):
    """Model parameters break a standing assumption (e.g. zero density at the shift)."""
