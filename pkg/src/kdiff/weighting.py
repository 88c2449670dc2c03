"""Radial power-law k-space weighting.

High- and low-frequency k-space magnitudes differ by orders of magnitude;
training a structure model on raw k-space lets the central peak dominate.
The weight matrix rebalances this: each entry is (r*du^2 + r*dv^2)^p where
(du, dv) is the pixel's offset from the k-space center, clamped from below
so the weighting stays invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grids import ComplexGrid, Domain, grid_center

_MOD = "masks-weights"


@dataclass(frozen=True)
class WeightMatrix:
    height: int
    width: int
    r: float
    p: float
    eps: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def make_weight(height: int, width: int, r: float, p: float = 0.5,
                eps: float = 1e-6) -> WeightMatrix:
    """Build the radial weighting matrix.

    The entry at (u, v) is max(eps, (r*(u-u0)^2 + r*(v-v0)^2)^p) with (u0, v0)
    the grid center. p = 0 gives the identity weighting; p > 0 grows with
    distance from the center. The center entry (raw value 0 for p > 0) is
    clamped to eps so elementwise division by the matrix is always defined.
    """
    if height < 1 or width < 1:
        raise ValidationError("dimensions must be positive", module=_MOD, param="height")
    if r <= 0:
        raise ValidationError(f"r must be positive, got {r}", module=_MOD, param="r")
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}", module=_MOD, param="eps")

    cu, cv = grid_center(height, width)
    du = np.arange(height, dtype=np.float64)[:, None] - cu
    dv = np.arange(width, dtype=np.float64)[None, :] - cv
    radial = r * du**2 + r * dv**2
    with np.errstate(divide="ignore"):
        raw = radial**p
    # p < 0 sends the zero-distance center to inf; cap it with the largest
    # finite entry so the matrix stays finite and invertible.
    if not np.all(np.isfinite(raw)):
        finite = raw[np.isfinite(raw)]
        cap = float(finite.max()) if finite.size else 1.0
        raw = np.where(np.isfinite(raw), raw, cap)
    return WeightMatrix(height, width, float(r), float(p), float(eps),
                        np.maximum(eps, raw))


def _check_shapes(x: ComplexGrid, w: WeightMatrix, op: str) -> None:
    if x.domain is not Domain.KSPACE:
        raise ValidationError(f"{op} expects a k-space grid", module=_MOD, param="domain")
    if x.shape != (w.height, w.width):
        raise ValidationError(
            f"shape mismatch: grid {x.shape} vs weight {(w.height, w.width)}",
            module=_MOD, param="shape",
        )


def apply_weight(x: ComplexGrid, w: WeightMatrix) -> ComplexGrid:
    """Elementwise product of a k-space grid with the weight matrix."""
    _check_shapes(x, w, "apply_weight")
    return x.with_data(x.data * w.values)


def unweight(x: ComplexGrid, w: WeightMatrix) -> ComplexGrid:
    """Elementwise division by the weight matrix; exact inverse of apply_weight."""
    _check_shapes(x, w, "unweight")
    return x.with_data(x.data / w.values)
