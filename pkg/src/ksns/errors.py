"""Exception types shared across the package."""


class KsnsError(Exception):
    """Base class for all package errors."""


class ConfigError(KsnsError):
    """Invalid configuration. Carries every violation found, not just the first."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DomainError(KsnsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class StateError(KsnsError):
    """Simulation state violates an invariant (e.g. negative density)."""


class NumericsError(KsnsError):
    """Iterative solver failed to converge. Carries the final residual."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class CFLError(KsnsError):
    """Time step exceeds the stability bound; the step was rejected."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt
