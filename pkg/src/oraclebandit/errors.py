"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid stream, profile, controller or run configuration."""


class TraceError(ValueError):
    """A label trace file could not be parsed or failed validation."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(ValueError):
    """A probability-model function was evaluated outside its domain."""


class ControllerError(RuntimeError):
    """Internal inconsistency in the specialization controller."""
