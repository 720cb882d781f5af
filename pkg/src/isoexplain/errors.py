"""Exception types shared across the package."""


class IsoExplainError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigurationError(IsoExplainError, ValueError):
    """Invalid training or experiment configuration."""


class DataError(IsoExplainError, ValueError):
    """Dataset contents violate an invariant (non-finite values, bad shape)."""


class InputError(IsoExplainError, ValueError):
    """A query input does not match the model (dimension mismatch, bad index)."""


class NormalizationError(IsoExplainError, ArithmeticError):
    """A vector with zero mass cannot be normalized."""


class CsvParseError(DataError):
    """A CSV cell could not be parsed as a finite number.

    Carries the 1-based file row (header line included in the count) and
    1-based column of the offending cell.
    """

    def __init__(self, message: str, row: int, column: int):
        super().__init__(f"{message} (row {row}, column {column})")
        self.row = row
        self.column = column


class CsvStructureError(DataError):
    """CSV rows are ragged or the file holds no data."""


class ModelFormatError(IsoExplainError):
    """Model file is corrupt, truncated, or not a forest document."""


class ModelVersionError(ModelFormatError):
    """Model file declares a format version this build does not read."""
