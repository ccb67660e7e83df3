"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where a model operation is defined."""


class HypothesisError(DomainError):
    """Disease parameters do not allow the two-timescale reduction."""


class ConfigError(ValueError):
    """A configuration file is malformed or contains invalid entries."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PositivityWarning(RuntimeWarning):
    """Disease map evaluated with parameters that do not guarantee positivity."""
