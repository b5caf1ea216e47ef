"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class SWSGPError(Exception):
    """Base class for all package errors."""


class ShapeError(SWSGPError, ValueError):
    """Array shapes are inconsistent."""


class ConfigError(SWSGPError, ValueError):
    """Invalid configuration or argument value."""


class FactorizationError(SWSGPError, ArithmeticError):
    """Cholesky factorization failed even after jitter escalation."""


class SingularMatrixError(SWSGPError, ArithmeticError):
    """Triangular factor has a zero on its diagonal."""


class NumericError(SWSGPError, ArithmeticError):
    """A loss or gradient became non-finite.

    ``blocks`` names the parameter blocks (or batch elements) involved.
    """

    def __init__(self, message: str, blocks: list[str] | None = None):
        super().__init__(message)
        self.blocks = list(blocks or [])


class DataError(SWSGPError, ValueError):
    """Invalid data values (bad labels, NaNs, ...)."""


class ParseError(DataError):
    """A CSV cell could not be parsed; carries its location."""

    def __init__(self, message: str, row: int, column: int):
        super().__init__(f"{message} (row {row}, column {column})")
        self.row = row
        self.column = column


class StalenessError(SWSGPError, RuntimeError):
    """A precomputed neighbor index no longer matches the inducing inputs."""
