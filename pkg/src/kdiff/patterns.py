"""Undersampling patterns and the k-space measurement operator.

Acceleration factor R is total k-space points over acquired points. Three
generators cover the usual acquisition modes: uniform (equispaced lines,
with a 2-D lattice fallback when line granularity alone cannot land within
the R tolerance), pointwise random, and variable-density Poisson disc whose
exclusion radius grows away from the center so low frequencies are kept
denser. All generators are bit-reproducible from their seed and force a
fully sampled acs calibration block when requested.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .grids import ComplexGrid, Domain, grid_center

_MOD = "undersampling"

R_TOLERANCE = 0.05


class PatternKind(enum.Enum):
    POISSON2D = "poisson"
    RANDOM2D = "random"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class SamplingPattern:
    kind: PatternKind
    mask: np.ndarray
    target_r: float
    achieved_r: float
    acs: int
    seed: int
    meets_target: bool
    poisson_scale: Optional[float] = None
    poisson_points: Optional[np.ndarray] = None

    def __post_init__(self):
        mask = np.ascontiguousarray(np.asarray(self.mask, dtype=np.uint8))
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def population(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class Measurement:
    """Undersampled k-space data: zero wherever the pattern did not sample."""

    y: ComplexGrid
    pattern: SamplingPattern
    noise_sd: float = 0.0

    def __post_init__(self):
        if self.y.domain is not Domain.KSPACE:
            raise ValidationError("measurement must live in k-space",
                                  module=_MOD, param="y")
        if self.y.shape != self.pattern.mask.shape:
            raise ValidationError("measurement/pattern shape mismatch",
                                  module=_MOD, param="shape")
        if np.any(self.y.data[self.pattern.mask == 0] != 0):
            raise ValidationError("measurement is nonzero at unsampled locations",
                                  module=_MOD, param="y")


def _acs_bounds(height: int, width: int, acs: int) -> tuple[int, int, int, int]:
    u0 = (height - acs) // 2
    v0 = (width - acs) // 2
    return u0, u0 + acs, v0, v0 + acs


def _validate_common(height: int, width: int, target_r: float, acs: int) -> None:
    if height < 1 or width < 1:
        raise ValidationError("dimensions must be positive", module=_MOD, param="height")
    if target_r < 1:
        raise ValidationError(f"acceleration must be at least 1, got {target_r}",
                              module=_MOD, param="target_r")
    if acs < 0 or acs > min(height, width):
        raise ValidationError(f"acs block side {acs} does not fit the grid",
                              module=_MOD, param="acs")


def _force_acs(mask: np.ndarray, acs: int) -> None:
    if acs > 0:
        u0, u1, v0, v1 = _acs_bounds(mask.shape[0], mask.shape[1], acs)
        mask[u0:u1, v0:v1] = 1


def _finish_pattern(kind: PatternKind, mask: np.ndarray, target_r: float,
                    acs: int, seed: int, **extra) -> SamplingPattern:
    achieved = mask.size / int(mask.sum())
    meets = abs(achieved - target_r) / target_r <= R_TOLERANCE
    return SamplingPattern(kind, mask, float(target_r), float(achieved),
                           acs, seed, meets, **extra)


def _equispaced(count: int, extent: int, offset: float) -> np.ndarray:
    """`count` distinct indices spread evenly over [0, extent)."""
    pos = (offset + np.arange(count) * (extent / count)) % extent
    return np.unique(np.floor(pos).astype(np.int64))


def gen_uniform(height: int, width: int, target_r: float, acs: int = 0,
                offset: int = 0, transpose: bool = False) -> SamplingPattern:
    """Equispaced-line pattern with an optional 2-D lattice fallback.

    Full phase-encode rows are tried first (every ~R-th line starting at
    ``offset``). When no row count lands within the R tolerance after the
    acs block is added, the search widens to equispaced rows x equispaced
    columns, which restores sub-line granularity. ``transpose`` swaps the
    row/column roles. Never raises on a missed target; the result records
    achieved R and whether it met tolerance.
    """
    if transpose:
        inner = gen_uniform(width, height, target_r, acs, offset, transpose=False)
        mask = np.ascontiguousarray(inner.mask.T)
        return SamplingPattern(PatternKind.UNIFORM, mask, inner.target_r,
                               inner.achieved_r, acs, inner.seed, inner.meets_target)

    _validate_common(height, width, target_r, acs)
    u0, u1, v0, v1 = _acs_bounds(height, width, acs)

    def lattice_popcount(rows: np.ndarray, cols: np.ndarray) -> int:
        in_acs_rows = int(((rows >= u0) & (rows < u1)).sum()) if acs else 0
        in_acs_cols = int(((cols >= v0) & (cols < v1)).sum()) if acs else 0
        return len(rows) * len(cols) + acs * acs - in_acs_rows * in_acs_cols

    all_cols = np.arange(width)
    best = None  # (r_err, -kc, rows, cols)

    def consider(rows: np.ndarray, cols: np.ndarray) -> None:
        nonlocal best
        pop = lattice_popcount(rows, cols)
        if pop == 0:
            return
        achieved = height * width / pop
        err = abs(achieved - target_r) / target_r
        key = (err, -len(cols))
        if best is None or key < best[0]:
            best = (key, rows, cols)

    # full-row candidates around the nominal line count
    for kr in range(1, height + 1):
        consider(_equispaced(kr, height, offset), all_cols)
    if best[0][0] > R_TOLERANCE:
        for kr in range(1, height + 1):
            rows = _equispaced(kr, height, offset)
            for kc in range(1, width):
                consider(rows, _equispaced(kc, width, 0))

    _, rows, cols = best
    mask = np.zeros((height, width), dtype=np.uint8)
    mask[np.ix_(rows, cols)] = 1
    _force_acs(mask, acs)
    return _finish_pattern(PatternKind.UNIFORM, mask, target_r, acs, seed=0)


def gen_random2d(height: int, width: int, target_r: float, acs: int = 0,
                 seed: int = 0) -> SamplingPattern:
    """Uniform pointwise random pattern hitting the sample budget exactly.

    The acs block is forced; the remaining budget is filled by sampling
    pixel locations uniformly without replacement, so the achieved R differs
    from the target only by integer rounding. Deterministic given the seed.
    """
    _validate_common(height, width, target_r, acs)
    total = height * width
    n_target = max(1, round(total / target_r))
    n_acs = acs * acs
    if n_acs > n_target * (1 + R_TOLERANCE):
        raise ValidationError(
            f"acs block of {n_acs} samples exceeds the budget {n_target} for R={target_r}",
            module=_MOD, param="acs",
        )

    mask = np.zeros((height, width), dtype=np.uint8)
    _force_acs(mask, acs)
    extra = n_target - int(mask.sum())
    if extra > 0:
        rng = np.random.default_rng(seed)
        free = np.flatnonzero(mask.ravel() == 0)
        picks = rng.choice(free, size=extra, replace=False)
        mask.ravel()[picks] = 1
    return _finish_pattern(PatternKind.RANDOM2D, mask, target_r, acs, seed)


def _poisson_darts(height: int, width: int, order: np.ndarray,
                   local_radius: np.ndarray) -> np.ndarray:
    """Greedy dart throwing: keep a candidate iff it clears every kept point
    by the smaller of the two local radii. Returns kept (u, v) pairs."""
    n = order.size
    acc = np.empty((n, 2), dtype=np.float64)
    acc_r = np.empty(n, dtype=np.float64)
    kept = 0
    for flat in order:
        u, v = divmod(int(flat), width)
        r_c = local_radius[u, v]
        if kept:
            d2 = (acc[:kept, 0] - u) ** 2 + (acc[:kept, 1] - v) ** 2
            limit = np.minimum(acc_r[:kept], r_c)
            if np.any(d2 < limit * limit):
                continue
        acc[kept] = (u, v)
        acc_r[kept] = r_c
        kept += 1
    return acc[:kept].astype(np.int64)


def poisson_local_radius(height: int, width: int, scale: float) -> np.ndarray:
    """Exclusion radius per pixel: scale * (1 + distance-from-center / sigma_d)."""
    cu, cv = grid_center(height, width)
    du = np.arange(height, dtype=np.float64)[:, None] - cu
    dv = np.arange(width, dtype=np.float64)[None, :] - cv
    sigma_d = min(height, width) / 6.0
    return scale * (1.0 + np.sqrt(du**2 + dv**2) / sigma_d)


def gen_poisson2d(height: int, width: int, target_r: float, acs: int = 0,
                  seed: int = 0, max_iter: int = 48) -> SamplingPattern:
    """Variable-density Poisson-disc pattern.

    Dart throwing over a seeded pixel permutation with a center-weighted
    exclusion radius; the global radius scale is bisected until the achieved
    acceleration lands within tolerance of the target. Raises if the
    bisection cannot reach the target, reporting the closest achieved R.
    """
    _validate_common(height, width, target_r, acs)
    rng = np.random.default_rng(seed)
    order = rng.permutation(height * width)

    def attempt(scale: float):
        points = _poisson_darts(height, width, order,
                                poisson_local_radius(height, width, scale))
        mask = np.zeros((height, width), dtype=np.uint8)
        mask[points[:, 0], points[:, 1]] = 1
        _force_acs(mask, acs)
        achieved = height * width / int(mask.sum())
        return achieved, mask, points

    lo, hi = 0.25, 4.0 * max(height, width)
    best = None  # (err, scale, achieved, mask, points)
    for _ in range(max_iter):
        mid = (lo * hi) ** 0.5
        achieved, mask, points = attempt(mid)
        err = abs(achieved - target_r) / target_r
        if best is None or err < best[0]:
            best = (err, mid, achieved, mask, points)
        if err <= R_TOLERANCE / 4:
            break
        if achieved < target_r:
            lo = mid
        else:
            hi = mid

    err, scale, achieved, mask, points = best
    if err > R_TOLERANCE:
        raise ValidationError(
            f"poisson bisection could not reach R={target_r}; closest achieved R={achieved:.4f}",
            module=_MOD, param="target_r",
        )
    return _finish_pattern(PatternKind.POISSON2D, mask, target_r, acs, seed,
                           poisson_scale=float(scale), poisson_points=points)


def apply_forward(x: ComplexGrid, pattern: SamplingPattern, noise_sd: float = 0.0,
                  seed: int = 0) -> Measurement:
    """Forward acquisition: mask out unsampled k-space, optionally add noise.

    y = mask * (x + eta) with eta i.i.d. circular complex Gaussian of the
    given standard deviation per real component.
    """
    if x.domain is not Domain.KSPACE:
        raise ValidationError("forward operator expects k-space input",
                              module=_MOD, param="x")
    if x.shape != pattern.mask.shape:
        raise ValidationError("grid/pattern shape mismatch", module=_MOD, param="shape")
    if noise_sd < 0:
        raise ValidationError("noise sd must be nonnegative", module=_MOD, param="noise_sd")

    data = x.data
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        eta = noise_sd * (rng.standard_normal(x.shape)
                          + 1j * rng.standard_normal(x.shape))
        data = data + eta
    y = ComplexGrid(data * pattern.mask, Domain.KSPACE)
    return Measurement(y=y, pattern=pattern, noise_sd=float(noise_sd))
