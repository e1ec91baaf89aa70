"""Exception taxonomy shared across the package."""


class DatumwiseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidActionError(DatumwiseError, ValueError):
    """An action was applied in a state where it is not available."""


class TerminalStateError(DatumwiseError, ValueError):
    """An operation that requires a non-terminal state received a terminal one."""


class DimensionMismatchError(DatumwiseError, ValueError):
    """Vector or matrix shapes do not agree."""


class CacheInvalidError(DatumwiseError, ValueError):
    """An incremental-score cache is inconsistent with the state it claims to describe."""


class DatasetError(DatumwiseError, ValueError):
    """A dataset or corpus violates a structural requirement."""


class ParseError(DatasetError):
    """A data file could not be parsed.

    Carries the 1-based line number when the failure is attributable to a line.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class NumericalError(DatumwiseError, ArithmeticError):
    """A numerical procedure failed (singular system, non-finite values)."""


class OutOfRangeError(DatumwiseError, ValueError):
    """A query point lies outside the supported range (no extrapolation)."""
