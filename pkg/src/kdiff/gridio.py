"""Binary grid-file serialization.

Layout (little-endian):
  magic "KSP1" | u32 version=1 | u8 domain (0=image, 1=kspace, 2=real)
  | u32 H | u32 W | payload float32.
Complex payloads interleave (re, im) row-major; real payloads are plain
row-major. Write-then-read round trips are byte-identical for float32 data.
"""

from __future__ import annotations

import struct
from typing import Union

import numpy as np

from .errors import (BadMagicError, DimensionOverflowError,
                     TruncatedPayloadError, ValidationError)
from .grids import ComplexGrid, Domain

_MAGIC = b"KSP1"
_VERSION = 1
_TAG_IMAGE = 0
_TAG_KSPACE = 1
_TAG_REAL = 2
_MAX_SIDE = 1 << 20

GridLike = Union[ComplexGrid, np.ndarray]


def encode_complex_payload(data: np.ndarray) -> bytes:
    inter = np.empty(data.shape + (2,), dtype="<f4")
    inter[..., 0] = data.real
    inter[..., 1] = data.imag
    return inter.tobytes()


def decode_complex_payload(buf: bytes, height: int, width: int) -> np.ndarray:
    flat = np.frombuffer(buf, dtype="<f4").reshape(height, width, 2)
    return flat[..., 0].astype(np.float64) + 1j * flat[..., 1].astype(np.float64)


def encode_real_payload(data: np.ndarray) -> bytes:
    return np.ascontiguousarray(data, dtype="<f4").tobytes()


def decode_real_payload(buf: bytes, height: int, width: int) -> np.ndarray:
    return np.frombuffer(buf, dtype="<f4").reshape(height, width).astype(np.float64)


def write_grid(grid: GridLike, path) -> None:
    """Serialize a complex grid or a real 2-D array."""
    if isinstance(grid, ComplexGrid):
        tag = _TAG_IMAGE if grid.domain is Domain.IMAGE else _TAG_KSPACE
        h, w = grid.shape
        payload = encode_complex_payload(grid.data)
    else:
        arr = np.asarray(grid, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError("real grid payload must be 2-D",
                                  module="cli-io", param="grid")
        tag = _TAG_REAL
        h, w = arr.shape
        payload = encode_real_payload(arr)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IBII", _VERSION, tag, h, w))
        fh.write(payload)


def read_grid(path) -> GridLike:
    """Parse a grid file; returns ComplexGrid or a real float array."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        header = fh.read(13)
        if len(header) != 13:
            raise TruncatedPayloadError("file ends inside the header")
        version, tag, height, width = struct.unpack("<IBII", header)
        if version != _VERSION:
            raise BadMagicError(f"unsupported version {version}")
        if tag not in (_TAG_IMAGE, _TAG_KSPACE, _TAG_REAL):
            raise BadMagicError(f"unknown domain tag {tag}")
        if not (1 <= height <= _MAX_SIDE and 1 <= width <= _MAX_SIDE):
            raise DimensionOverflowError(f"dimensions {height}x{width} out of range")

        per_pixel = 8 if tag in (_TAG_IMAGE, _TAG_KSPACE) else 4
        expected = height * width * per_pixel
        payload = fh.read(expected + 1)
        if len(payload) < expected:
            raise TruncatedPayloadError(
                f"payload holds {len(payload)} bytes, header promises {expected}")
        if len(payload) > expected:
            raise TruncatedPayloadError(
                f"trailing bytes after the {expected}-byte payload")

    if tag == _TAG_REAL:
        return decode_real_payload(payload, height, width)
    domain = Domain.IMAGE if tag == _TAG_IMAGE else Domain.KSPACE
    return ComplexGrid(decode_complex_payload(payload, height, width), domain)
