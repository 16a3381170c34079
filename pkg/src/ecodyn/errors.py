"""Exception types raised across the package."""


class EcodynError(Exception):
    """Base class for every error raised by ecodyn."""


class DomainError(EcodynError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class RootFindingError(EcodynError, RuntimeError):
    """A bracketed root search failed (no sign change, or no convergence)."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class IntegrationError(EcodynError, RuntimeError):
    """Step-size underflow or a state leaving the unit square."""


class BracketError(EcodynError, ValueError):
    """Both ends of a bisection bracket give the same outcome."""
