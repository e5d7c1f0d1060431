"""Exception types raised by the toolkit."""


class DomainError(ValueError):
    """Argument outside the domain where the operation is defined."""


class InvalidProfileError(ValueError):
    """Warping function or manifold data violates a structural invariant."""


class PositivityError(ValueError):
    """Ricci curvature fails to be positive somewhere it is required."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NoSolutionError(ValueError):
    """Poisson problem has no solution (compatibility condition violated)."""


class InsufficientDataError(ValueError):
    """Too few resolved samples for a fit or extrapolation."""


class ConvergenceError(RuntimeError):
    """Iterative or extrapolation procedure did not converge."""


class ConfigError(ValueError):
    """Experiment configuration could not be parsed or validated."""
