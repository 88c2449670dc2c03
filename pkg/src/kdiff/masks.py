"""Virtual binary k-space masks, their set relationships, and masked entropy.

Detail models are pointed at sub-regions of k-space by {0,1} masks. Three
families are provided: concentric circles (nested, "contained"), an inner
disc plus equiangular spokes ("intersected"), and seeded random block tilings
("disjoint"). A masked-entropy report quantifies how much information each
mask admits and classifies the pair relationship.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .grids import ComplexGrid, grid_center

_MOD = "masks-weights"


class MaskShape(enum.Enum):
    CIRCLE = "circle"
    RADIAL = "radial"
    RANDOM = "random"


class Relation(enum.Enum):
    CONTAINED = "contained"
    INTERSECTED = "intersected"
    DISJOINT = "disjoint"


@dataclass(frozen=True)
class VirtualMask:
    shape: MaskShape
    height: int
    width: int
    values: np.ndarray
    diameter: Optional[float] = None
    spokes: Optional[int] = None
    spoke_width: Optional[float] = None
    inner_diameter: Optional[float] = None
    coverage: Optional[float] = None
    block: Optional[int] = None
    seed: Optional[int] = None
    complement: bool = False

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.uint8))
        if vals.shape != (self.height, self.width):
            raise ValidationError("mask payload shape mismatch", module=_MOD, param="values")
        if not np.all((vals == 0) | (vals == 1)):
            raise ValidationError("mask values must be exactly 0 or 1",
                                  module=_MOD, param="values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def population(self) -> int:
        return int(self.values.sum())


def _center_offsets(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    cu, cv = grid_center(height, width)
    du = np.arange(height, dtype=np.float64)[:, None] - cu
    dv = np.arange(width, dtype=np.float64)[None, :] - cv
    return du, dv


def _finish(values: np.ndarray, complement: bool) -> np.ndarray:
    values = values.astype(np.uint8)
    return (1 - values) if complement else values


def make_circle_mask(height: int, width: int, a: float,
                     complement: bool = False) -> VirtualMask:
    """Disc of diameter ``a`` about the grid center.

    A pixel is 1 iff its Euclidean distance to the center is strictly less
    than a/2.
    """
    if a <= 0:
        raise ValidationError(f"diameter must be positive, got {a}", module=_MOD, param="a")
    du, dv = _center_offsets(height, width)
    inside = np.sqrt(du**2 + dv**2) < a / 2.0
    return VirtualMask(MaskShape.CIRCLE, height, width, _finish(inside, complement),
                       diameter=float(a), complement=complement)


def make_radial_mask(height: int, width: int, spokes: int, spoke_width: float,
                     inner_diameter: float = 0.0,
                     complement: bool = False) -> VirtualMask:
    """Inner disc plus equiangular full-length spokes through the center.

    Spoke k runs along the line at angle k * 180deg / spokes from the
    horizontal axis; a pixel belongs to a spoke when its perpendicular
    distance to that line is strictly less than spoke_width / 2.
    """
    if spokes < 1:
        raise ValidationError(f"spokes must be >= 1, got {spokes}", module=_MOD, param="spokes")
    if spoke_width <= 0:
        raise ValidationError(f"spoke width must be positive, got {spoke_width}",
                              module=_MOD, param="spoke_width")
    if inner_diameter < 0:
        raise ValidationError("inner diameter must be nonnegative",
                              module=_MOD, param="inner_diameter")

    du, dv = _center_offsets(height, width)
    inside = np.zeros((height, width), dtype=bool)
    if inner_diameter > 0:
        inside |= np.sqrt(du**2 + dv**2) < inner_diameter / 2.0
    for k in range(spokes):
        theta = math.pi * k / spokes
        # distance from (du, dv) to the line through the origin at angle theta
        perp = np.abs(du * math.cos(theta) - dv * math.sin(theta))
        inside |= perp < spoke_width / 2.0
    return VirtualMask(MaskShape.RADIAL, height, width, _finish(inside, complement),
                       spokes=spokes, spoke_width=float(spoke_width),
                       inner_diameter=float(inner_diameter), complement=complement)


def _block_tiles(height: int, width: int, block: int) -> list[tuple[int, int, int, int]]:
    tiles = []
    for u0 in range(0, height, block):
        for v0 in range(0, width, block):
            tiles.append((u0, min(u0 + block, height), v0, min(v0 + block, width)))
    return tiles


def make_random_mask(height: int, width: int, coverage: float, block: int,
                     seed: int, complement: bool = False) -> VirtualMask:
    """Seeded random tiling mask: block-sized tiles switched on until coverage.

    Tiles from the block x block tiling of the grid are selected uniformly
    without replacement until at least ``coverage`` of all pixels are 1, so
    the population fraction lands in [coverage, coverage + block^2/(H*W)).
    Deterministic for a given seed.
    """
    if not (0.0 < coverage < 1.0):
        raise ValidationError(f"coverage must lie in (0, 1), got {coverage}",
                              module=_MOD, param="coverage")
    if block < 1:
        raise ValidationError(f"block must be >= 1, got {block}", module=_MOD, param="block")

    rng = np.random.default_rng(seed)
    tiles = _block_tiles(height, width, block)
    order = rng.permutation(len(tiles))
    values = np.zeros((height, width), dtype=np.uint8)
    needed = coverage * height * width
    filled = 0
    for idx in order:
        if filled >= needed:
            break
        u0, u1, v0, v1 = tiles[idx]
        filled += (u1 - u0) * (v1 - v0) - int(values[u0:u1, v0:v1].sum())
        values[u0:u1, v0:v1] = 1
    return VirtualMask(MaskShape.RANDOM, height, width, _finish(values, complement),
                       coverage=float(coverage), block=block, seed=seed,
                       complement=complement)


def make_random_mask_pair(height: int, width: int, coverage: float, block: int,
                          seed: int) -> tuple[VirtualMask, VirtualMask]:
    """Two random block masks drawn from disjoint tile sets.

    Each covers at least ``coverage`` of the grid; their supports never
    overlap (the disjoint-relationship construction). Requires
    2 * coverage < 1 so both budgets fit.
    """
    if not (0.0 < coverage < 0.5):
        raise ValidationError(
            f"pair coverage must lie in (0, 0.5), got {coverage}",
            module=_MOD, param="coverage",
        )
    if block < 1:
        raise ValidationError(f"block must be >= 1, got {block}", module=_MOD, param="block")

    rng = np.random.default_rng(seed)
    tiles = _block_tiles(height, width, block)
    order = rng.permutation(len(tiles))
    needed = coverage * height * width

    masks = []
    cursor = 0
    for _ in range(2):
        values = np.zeros((height, width), dtype=np.uint8)
        filled = 0
        while filled < needed and cursor < len(tiles):
            u0, u1, v0, v1 = tiles[order[cursor]]
            values[u0:u1, v0:v1] = 1
            filled += (u1 - u0) * (v1 - v0)
            cursor += 1
        if filled < needed:
            raise ValidationError("grid too small for two disjoint masks at this coverage",
                                  module=_MOD, param="coverage")
        masks.append(VirtualMask(MaskShape.RANDOM, height, width, values,
                                 coverage=float(coverage), block=block, seed=seed))
    return masks[0], masks[1]


def relationship(m1: VirtualMask, m2: VirtualMask) -> Relation:
    """Set relation between the 1-supports of two masks.

    Contained means supp(m2) is a subset of supp(m1); Disjoint means the
    supports never overlap; anything else is Intersected.
    """
    if (m1.height, m1.width) != (m2.height, m2.width):
        raise ValidationError("mask shape mismatch", module=_MOD, param="shape")
    s1 = m1.values.astype(bool)
    s2 = m2.values.astype(bool)
    inter = s1 & s2
    if not inter.any():
        return Relation.DISJOINT
    if np.array_equal(inter, s2):
        return Relation.CONTAINED
    return Relation.INTERSECTED


def entropy(x: ComplexGrid, mask: VirtualMask, bins: int = 256) -> float:
    """Shannon entropy (bits) of the masked magnitude histogram.

    Magnitudes of pixels inside the mask support are min-max quantized into
    ``bins`` equal-width bins; empty bins contribute zero. A constant region
    collapses into one bin and scores 0 bits.
    """
    if bins < 2:
        raise ValidationError(f"bins must be >= 2, got {bins}", module=_MOD, param="bins")
    if x.shape != (mask.height, mask.width):
        raise ValidationError("grid/mask shape mismatch", module=_MOD, param="shape")
    support = mask.values.astype(bool)
    if not support.any():
        raise ValidationError("mask support is empty", module=_MOD, param="mask")

    mags = np.abs(x.data[support])
    lo, hi = float(mags.min()), float(mags.max())
    if hi == lo:
        return 0.0
    idx = np.floor((mags - lo) / (hi - lo) * bins).astype(np.int64)
    idx = np.minimum(idx, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    probs = counts[counts > 0] / mags.size
    return float(-(probs * np.log2(probs)).sum())


@dataclass(frozen=True)
class EntropyReport:
    e1: float
    e2: float
    total: float
    bins: int
    relation: Relation


def entropy_report(x: ComplexGrid, m1: VirtualMask, m2: VirtualMask,
                   bins: int = 256) -> EntropyReport:
    """Entropy of two masked views of the same k-space grid plus their relation."""
    e1 = entropy(x, m1, bins)
    e2 = entropy(x, m2, bins)
    return EntropyReport(e1=e1, e2=e2, total=e1 + e2, bins=bins,
                         relation=relationship(m1, m2))
