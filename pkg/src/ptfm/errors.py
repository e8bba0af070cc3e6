"""Exception hierarchy shared by the solver modules."""


class LpError(Exception):
    """Base class for all solver errors."""


class DimensionError(LpError, ValueError):
    """Array shapes do not match the instance, or m >= n."""


class NonFiniteError(LpError, ValueError):
    """NaN or inf in problem data."""


class InfeasiblePointError(LpError, ValueError):
    """A supplied point is not strictly feasible."""


class FactorizationError(LpError, ArithmeticError):
    """Cholesky of the normal-equations matrix hit a small or negative pivot."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class OutsideDomainError(LpError, ValueError):
    """A state left the barrier domain (non-positive residual or log argument)."""


class StallError(LpError, RuntimeError):
    """The predictor search could not find a positive admissible step."""
