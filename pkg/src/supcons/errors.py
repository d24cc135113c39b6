"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A quadrature or root-finding routine failed to reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class AssumptionViolation(ValueError):
    """An empirical check of a density assumption failed.

    ``pairs`` holds the offending ``(R, eps_R)`` values.
    """

    def __init__(self, message, pairs=()):
        super().__init__(message)
        self.pairs = list(pairs)


class ConfigError(ValueError):
    """Invalid experiment configuration."""
