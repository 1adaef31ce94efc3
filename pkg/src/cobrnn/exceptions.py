"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, format and I/O
errors exit 2, numeric failures exit 3.
"""


class CobrnnError(Exception):
    """Base class for every error raised by this package."""


class UsageError(CobrnnError, ValueError):
    """Invalid arguments or configuration."""


class ConfigError(UsageError):
    """A configuration that is well-formed but cannot be honoured."""


class FormatError(CobrnnError, ValueError):
    """A malformed input file.  ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(CobrnnError, ArithmeticError):
    """Non-finite values where finite ones are required."""
