"""
Exception hierarchy shared by every package of the project.
"""

from typing import Optional, Sequence


class R2MError(Exception):
    """Base class for all project errors."""


class DimensionError(R2MError, ValueError):
    """Raised when tensor shapes do not agree."""

    def __init__(self, op: str, *shapes: Sequence[int], detail: str = ""):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        shown = " vs ".join(str(s) for s in self.shapes)
        message = f"{op}: incompatible shapes {shown}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class NumericError(R2MError, ArithmeticError):
    """Raised when a NaN or infinite value is detected."""


class ContractError(R2MError, RuntimeError):
    """Raised when a precondition of an operation is violated."""


class VocabularyError(R2MError, KeyError):
    """Raised for tokens or ids outside the vocabulary."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "vocabulary error"


class DataFormatError(R2MError, ValueError):
    """Raised for malformed data files; carries the path and 1-based line."""

    def __init__(self, path: str, line_no: Optional[int], message: str):
        self.path = str(path)
        self.line_no = line_no
        where = f"{self.path}:{line_no}" if line_no is not None else self.path
        super().__init__(f"{where}: {message}")


class DataFileNotFoundError(R2MError, FileNotFoundError):
    """Raised when a required input file is missing."""

    def __init__(self, kind: str, path: str):
        self.kind = kind
        self.path = str(path)
        super().__init__(f"{kind} file not found: {self.path}")


class ConfigError(R2MError, ValueError):
    """Raised for invalid configuration keys or values."""


class CheckpointError(R2MError, ValueError):
    """Raised for unreadable or inconsistent checkpoints."""
