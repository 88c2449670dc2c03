"""Complex 2-D grids, centered orthonormal Fourier transforms, coil combination.

MRI raw data lives in k-space, the 2-D spatial-frequency domain; images are
related to it by a Fourier transform. Everything downstream (masks, weights,
data consistency) assumes the zero-frequency bin sits at the grid center
(floor(H/2), floor(W/2)), so the transforms here wrap numpy's FFT in the
usual ifftshift / fftshift sandwich and use orthonormal scaling, which makes
them exact inverses and energy preserving.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_MOD = "kspace-core"


class Domain(enum.Enum):
    IMAGE = "image"
    KSPACE = "kspace"


@dataclass(frozen=True)
class ComplexGrid:
    """An H x W complex-valued array tagged with the domain it lives in.

    The payload is stored as a read-only complex128 array; instances are
    immutable and safe to share across threads.
    """

    data: np.ndarray
    domain: Domain

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(
                f"grid must be 2-D with positive dimensions, got shape {arr.shape}",
                module=_MOD, param="data",
            )
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValidationError(
                "grid contains non-finite values", module=_MOD, param="data",
            )
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> "ComplexGrid":
        """New grid with the same domain tag and different payload."""
        return ComplexGrid(data, self.domain)


@dataclass(frozen=True)
class CoilStack:
    """An ordered list of same-shaped, same-domain coil grids."""

    coils: tuple[ComplexGrid, ...] = field(default_factory=tuple)

    def __post_init__(self):
        coils = tuple(self.coils)
        if len(coils) < 1:
            raise ValidationError("coil stack must hold at least one coil",
                                  module=_MOD, param="coils")
        first = coils[0]
        for c in coils[1:]:
            if c.shape != first.shape or c.domain != first.domain:
                raise ValidationError(
                    "all coils must share dimensions and domain",
                    module=_MOD, param="coils",
                )
        object.__setattr__(self, "coils", coils)

    @property
    def num_coils(self) -> int:
        return len(self.coils)

    @property
    def domain(self) -> Domain:
        return self.coils[0].domain


def _require_domain(grid: ComplexGrid, domain: Domain, op: str) -> None:
    if grid.domain is not domain:
        raise ValidationError(
            f"{op} expects a {domain.value}-domain grid, got {grid.domain.value}",
            module=_MOD, param="domain",
        )


def fft2c(img: ComplexGrid) -> ComplexGrid:
    """Centered orthonormal 2-D DFT: image domain to k-space.

    Zero frequency lands at (floor(H/2), floor(W/2)); Parseval holds exactly
    up to float rounding because of the 1/sqrt(HW) scaling on both directions.
    """
    _require_domain(img, Domain.IMAGE, "fft2c")
    k = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(img.data), norm="ortho"))
    return ComplexGrid(k, Domain.KSPACE)


def ifft2c(ksp: ComplexGrid) -> ComplexGrid:
    """Centered orthonormal 2-D inverse DFT: k-space to image domain.

    Exact inverse of fft2c.
    """
    _require_domain(ksp, Domain.KSPACE, "ifft2c")
    img = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(ksp.data), norm="ortho"))
    return ComplexGrid(img, Domain.IMAGE)


def sos_combine(stack: CoilStack) -> np.ndarray:
    """Root-sum-of-squares magnitude combination of an image-domain coil stack.

    Returns a real, nonnegative H x W array: per pixel, sqrt(sum_c |x_c|^2).
    """
    if stack.domain is not Domain.IMAGE:
        raise ValidationError("sos_combine expects image-domain coils",
                              module=_MOD, param="domain")
    acc = np.zeros(stack.coils[0].shape, dtype=np.float64)
    for coil in stack.coils:
        acc += np.abs(coil.data) ** 2
    return np.sqrt(acc)


def grid_center(height: int, width: int) -> tuple[int, int]:
    """Center pixel used by masks, weights, and the FFT convention."""
    return height // 2, width // 2
