"""Exception hierarchy shared across the package."""


class MemwaveError(Exception):
    """Base class for all package-specific errors."""


class DomainError(MemwaveError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """Point evaluation was requested at a non-integrable or undefined point."""


class ConvergenceError(MemwaveError, RuntimeError):
    """An iterative or adaptive procedure failed to reach its tolerance."""


class QuadratureError(ConvergenceError):
    """Adaptive quadrature did not converge; diagnostics in args."""


class UnsupportedOperationError(MemwaveError, ValueError):
    """The operation is not defined for this kernel family or parameter range."""


class DegeneracyError(MemwaveError, RuntimeError):
    """The leading coefficient 1 + 2*k*phi dropped to or below the 0.5 floor."""


class BallViolationError(MemwaveError, RuntimeError):
    """A fixed-point iterate left the non-degeneracy ball 4|k| sup|u| <= 1."""

    def __init__(self, message: str, margin: float, sup_norm: float):
        super().__init__(message)
        self.margin = margin
        self.sup_norm = sup_norm


class FixedPointError(ConvergenceError):
    """Picard iteration did not converge; carries the residual history."""

    def __init__(self, message: str, residuals: list[float]):
        super().__init__(message)
        self.residuals = residuals


class SingularSolveError(MemwaveError, RuntimeError):
    """A time-step linear system was singular or numerically unusable."""

    def __init__(self, message: str, condition_estimate: float):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class DegenerateSignalError(MemwaveError, RuntimeError):
    """A coercivity test signal produced a numerically zero convolution."""
