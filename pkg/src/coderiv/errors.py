"""Exception types shared across the package."""


class DomainError(ValueError):
    """Raised when a quantity is requested at a point where it does not exist."""


class ConfigError(ValueError):
    """Raised for inconsistent estimator or scenario configuration."""


class OverflowGuard(ArithmeticError):
    """Raised when a polynomial exponent exceeds the per-variable bound."""


class NoConvergence(RuntimeError):
    """Raised when the Newton solver fails to reach the residual tolerance.

    The residual norm after each accepted step is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])
