"""
Error hierarchy for the ranking engine.

Every error raised on purpose derives from BinRankError and carries an
``exit_kind`` key into ``config.EXIT_CODES``.
"""
from typing import Optional


class BinRankError(Exception):
    """Base class for expected failures."""

    exit_kind = "runtime"


class ConfigError(BinRankError, ValueError):
    """Invalid hyperparameters, fractions or command-line values."""

    exit_kind = "usage"


class DataFormatError(BinRankError, ValueError):
    """Malformed ratings input."""

    exit_kind = "data"

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EmptyDatasetError(BinRankError, ValueError):
    exit_kind = "data"


class SplitError(BinRankError, ValueError):
    """A split would leave one of its parts empty."""

    exit_kind = "usage"


class ModelFormatError(BinRankError):
    """Model or dataset file could not be decoded."""

    exit_kind = "data"


class BadMagicError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TruncatedFileError(ModelFormatError):
    pass


class WrongModelKindError(ModelFormatError):
    pass


class NonFiniteGradientError(BinRankError, FloatingPointError):
    """Training produced NaN or inf gradients."""


class SamplingExhausted(BinRankError):
    """The user's positives cover the whole catalog."""


class SearchFailedError(BinRankError):
    """Every trial of a hyperparameter search failed."""
