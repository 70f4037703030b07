"""Exception types shared across the package."""


class SeqKdLabError(Exception):
    """Base class for all package errors."""


class EmptyInput(SeqKdLabError):
    """Input text normalized to nothing."""


class ConfigError(SeqKdLabError):
    """Invalid or inconsistent configuration."""


class ParseError(SeqKdLabError):
    """Malformed dataset file; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownToken(SeqKdLabError):
    """Token has no entry in the vocabulary or embedding table."""


class ShapeError(SeqKdLabError):
    """Tensor shapes incompatible with the requested operation."""


class NumericError(SeqKdLabError):
    """NaN/Inf encountered where finite values are required."""


class DomainError(SeqKdLabError):
    """Argument outside the mathematical domain of the operation."""


class LengthError(SeqKdLabError):
    """Sequence exceeds a configured maximum length."""


class AlignmentError(SeqKdLabError):
    """Datasets disagree on utterance ids or ordering."""


class IoError(SeqKdLabError):
    """Filesystem failure while persisting an artifact."""
