"""Exception hierarchy shared across the package."""


class OsrError(Exception):
    """Base class for all package errors."""


class ParameterError(OsrError, ValueError):
    """An argument lies outside its valid domain."""


class FormatError(OsrError, ValueError):
    """A data file does not match the expected format."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InputError(OsrError, ValueError):
    """Non-finite or otherwise unusable numeric input."""


class LabelError(OsrError, ValueError):
    """Class label out of range for the operation."""


class InitializationError(OsrError, ValueError):
    """Model parameters cannot be initialized from the given data."""


class ConfigurationError(OsrError, ValueError):
    """Model or experiment configuration is inconsistent."""


class DomainError(OsrError, ArithmeticError):
    """Probability argument outside the open interval (0, 1)."""


class MetricUndefinedError(OsrError, ValueError):
    """Metric requires both positive and negative samples."""
