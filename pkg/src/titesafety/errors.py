"""Exception types shared across the package."""


class TiteSafetyError(Exception):
    """Base class for all package errors."""


class DomainError(TiteSafetyError, ValueError):
    """An argument lies outside the domain of a function."""


class SearchError(TiteSafetyError, RuntimeError):
    """A root or step search could not bracket or converge."""


class ValidationError(TiteSafetyError, ValueError):
    """A design, method or data record violates its invariants.

    ``code`` names the violated invariant so callers can tell failures apart.
    """

    def __init__(self, code, message):
        super().__init__(f"[{code}] {message}")
        self.code = code


class CalibrationInfeasible(TiteSafetyError, RuntimeError):
    """No critical value keeps the binary type I error at or below alpha."""


class ConfigurationError(TiteSafetyError, ValueError):
    """Inconsistent inputs, e.g. rules with different designs compared together."""
