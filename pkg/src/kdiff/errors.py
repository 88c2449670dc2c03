"""Exception types shared across the package."""

from __future__ import annotations


class KdiffError(Exception):
    """Base class for all package errors."""


class ValidationError(KdiffError):
    """Raised when an input violates an operation's preconditions.

    Carries the originating module and the offending parameter so callers
    (CLI, service) can surface machine-parseable diagnostics.
    """

    def __init__(self, message: str, *, module: str = "", param: str = ""):
        super().__init__(message)
        self.module = module
        self.param = param

    def __str__(self) -> str:
        prefix = []
        if self.module:
            prefix.append(f"module={self.module}")
        if self.param:
            prefix.append(f"param={self.param}")
        if prefix:
            return f"[{' '.join(prefix)}] {self.args[0]}"
        return str(self.args[0])


class GridFileError(KdiffError):
    """Base class for grid-file serialization failures."""


class BadMagicError(GridFileError):
    """File does not start with the expected magic bytes."""


class TruncatedPayloadError(GridFileError):
    """Header-declared payload length exceeds the bytes present."""


class DimensionOverflowError(GridFileError):
    """Header declares dimensions outside the supported range."""


class MlpFormatError(KdiffError):
    """Base class for MLP weight-file failures."""


class MlpMagicError(MlpFormatError):
    """Wrong magic or unsupported version."""


class MlpDimensionError(MlpFormatError):
    """Layer dimensions do not chain or do not match the payload."""


class MlpValueError(MlpFormatError):
    """Weight payload contains non-finite values."""
