"""Exception types shared across the package."""


class GsotError(Exception):
    """Base class for package errors."""


class ConfigError(GsotError):
    """Invalid configuration or arguments (CLI exit code 2)."""


class SolverError(GsotError):
    """A solver failed to produce a valid solution (CLI exit code 1)."""


class ConvergenceError(SolverError):
    """Iteration cap reached before the stopping rule was met."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
