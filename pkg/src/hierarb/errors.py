"""Exception types shared across the package."""


class HierarbError(Exception):
    """Base class for all package errors."""


class ValidationError(HierarbError, ValueError):
    """An object violates a construction-time invariant."""


class DomainError(HierarbError, ValueError):
    """An operation was called outside its domain (bad profile, empty set, ...)."""


class PreconditionError(DomainError):
    """A documented precondition does not hold.

    ``details`` carries a machine-readable description of the failing case
    (opponent profile, state, ...), so callers can report it.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class LadderError(HierarbError, RuntimeError):
    """Iterated elimination emptied an agent's strategy set."""


class ConfigError(ValidationError):
    """Generator bounds admit no valid instance."""


class ScenarioError(ValidationError):
    """A scenario document failed to parse or validate.

    ``line`` is the 1-based line of the offending token when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
