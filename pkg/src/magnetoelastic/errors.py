"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid geometry, physics or run configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(RuntimeError):
    """Non-finite values, singular systems or unstable step sizes."""


class DimensionError(ValueError):
    """Problem too large for a dense code path."""
