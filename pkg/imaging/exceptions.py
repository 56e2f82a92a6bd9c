"""
Exception hierarchy for the imaging toolkit.

Numerical modules raise these; management commands turn any ImagingError
into a CommandError so the process exits nonzero with a one-line message.
"""

from typing import Optional


class ImagingError(Exception):
    """Base class for every error raised by the imaging package."""


class ParameterError(ImagingError, ValueError):
    """A parameter value is outside its valid range."""


class DimensionError(ImagingError, ValueError):
    """Grid shapes disagree, or a frame is too small for the requested blocks."""


class GeometryError(ImagingError, ValueError):
    """An object description does not fit inside its grid."""


class FormatError(ImagingError):
    """
    A file could not be decoded.

    Args:
        message: Human readable description
        offset: Byte offset where decoding failed, when known
    """

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class InsufficientDataError(ImagingError):
    """Too few measurements to form an ensemble average."""


class UndefinedMetricError(ImagingError, ArithmeticError):
    """A metric is undefined for the given input (e.g. zero variance)."""


class StorageError(ImagingError, OSError):
    """Reading or writing a file failed."""

    def __init__(self, message: str, path=None):
        self.path = path
        if path is not None:
            message = f"{message}: {path}"
        super().__init__(message)
