"""Exception types shared across the toolkit."""


class GhzSenseError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(GhzSenseError, ValueError):
    """An input violates a documented precondition or invariant."""


class SingularMatrixError(GhzSenseError):
    """Inversion was requested on a numerically singular matrix."""


class ConvergenceError(GhzSenseError, RuntimeError):
    """An iterative solver stopped without meeting its convergence criteria."""
