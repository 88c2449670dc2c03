"""Predictor-corrector sampling with data consistency and multi-model cascades.

One reconstruction walks a noise ladder from sigma_max down to sigma_min.
At each level every model slot takes the running k-space estimate, maps it
into its own space (radially weighted for the structure model, mask-windowed
for detail models), runs one reverse-diffusion predictor step plus a number
of annealed-Langevin corrector steps, re-imposes the acquired samples after
every step, and hands the estimate on. Detail slots write back only on
their mask support, so everything outside is untouched by construction.
"""

from __future__ import annotations

import concurrent.futures
import enum
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ValidationError
from .grids import ComplexGrid, Domain, ifft2c
from .masks import VirtualMask
from .patterns import Measurement
from .scores import NoiseSchedule, ScoreProvider, complex_normal
from .weighting import WeightMatrix, apply_weight, unweight

_MOD = "sampler-recon"


@dataclass(frozen=True)
class Weighted:
    matrix: WeightMatrix


@dataclass(frozen=True)
class Masked:
    mask: VirtualMask


@dataclass(frozen=True)
class Identity:
    pass


Transform = Union[Weighted, Masked, Identity]


class Role(enum.Enum):
    STRUCTURE = "structure"
    DETAIL = "detail"


class Combination(enum.Enum):
    CASCADE = "cascade"
    PARALLEL = "parallel"


def _default_role(transform: Transform) -> Role:
    return Role.DETAIL if isinstance(transform, Masked) else Role.STRUCTURE


@dataclass(frozen=True)
class ModelSlot:
    """A score provider paired with the k-space transform it was trained under."""

    provider: ScoreProvider
    transform: Transform = field(default_factory=Identity)
    role: Optional[Role] = None

    def __post_init__(self):
        role = self.role if self.role is not None else _default_role(self.transform)
        if isinstance(self.transform, Masked) and role is not Role.DETAIL:
            raise ValidationError("mask-windowed slots must carry the detail role",
                                  module=_MOD, param="role")
        if not isinstance(self.transform, Masked) and role is Role.DETAIL:
            raise ValidationError("detail slots must carry a mask transform",
                                  module=_MOD, param="role")
        object.__setattr__(self, "role", role)


@dataclass(frozen=True)
class ReconConfig:
    schedule: NoiseSchedule
    slots: tuple[ModelSlot, ...]
    corrector_steps: int = 1
    snr: float = 0.16
    dc_lambda: Optional[float] = None  # None = hard replacement
    combination: Combination = Combination.CASCADE
    seed: int = 0
    masked_writeback: str = "replace"  # or "literal"
    eps_floor: float = 1e-12

    def __post_init__(self):
        slots = tuple(self.slots)
        if not slots:
            raise ValidationError("need at least one model slot", module=_MOD,
                                  param="slots")
        if self.combination is Combination.CASCADE:
            seen_detail = False
            for slot in slots:
                if slot.role is Role.DETAIL:
                    seen_detail = True
                elif seen_detail:
                    raise ValidationError(
                        "cascade order must run structure slots before detail slots",
                        module=_MOD, param="slots")
        if self.corrector_steps < 0:
            raise ValidationError("corrector_steps must be >= 0", module=_MOD,
                                  param="corrector_steps")
        if self.snr <= 0:
            raise ValidationError("snr must be positive", module=_MOD, param="snr")
        if self.dc_lambda is not None and self.dc_lambda <= 0:
            raise ValidationError("dc lambda must be positive (or None for hard)",
                                  module=_MOD, param="dc_lambda")
        if self.masked_writeback not in ("replace", "literal"):
            raise ValidationError(f"unknown masked_writeback {self.masked_writeback!r}",
                                  module=_MOD, param="masked_writeback")
        object.__setattr__(self, "slots", slots)


@dataclass(frozen=True)
class LevelDiag:
    level: int
    sigma: float
    residual: float


@dataclass(frozen=True)
class ReconResult:
    kspace: ComplexGrid
    image: ComplexGrid
    diagnostics: tuple[LevelDiag, ...]


Observer = Callable[[int, int, ComplexGrid, ComplexGrid], None]


def predictor_step(x: ComplexGrid, provider: ScoreProvider, sigma_i: float,
                   sigma_ip1: float, rng: Optional[np.random.Generator]) -> ComplexGrid:
    """One reverse-diffusion step from noise level sigma_{i+1} down to sigma_i.

    x_new = x + (sigma_{i+1}^2 - sigma_i^2) * score(x, sigma_{i+1})
              + sqrt(sigma_{i+1}^2 - sigma_i^2) * z

    Passing rng=None pins the noise draw to zero (deterministic update).
    """
    if not (sigma_ip1 > sigma_i >= 0):
        raise ValidationError(
            f"need sigma_next > sigma >= 0, got ({sigma_i}, {sigma_ip1})",
            module=_MOD, param="sigma_i",
        )
    dvar = sigma_ip1**2 - sigma_i**2
    data = x.data + dvar * provider(x, sigma_ip1).data
    if rng is not None:
        data = data + np.sqrt(dvar) * complex_normal(x.shape, rng)
    return x.with_data(data)


def corrector_step(x: ComplexGrid, provider: ScoreProvider, sigma_i: float,
                   snr: float, rng: Optional[np.random.Generator],
                   step_size: Optional[float] = None,
                   eps_floor: float = 1e-12) -> ComplexGrid:
    """One annealed-Langevin refinement step at a fixed noise level.

    x_new = x + eps * score(x, sigma_i) + sqrt(2 * eps) * z

    The step size follows the signal-to-noise rule
    eps = 2 * (snr * ||z|| / ||score||)^2, recomputed per call; a zero score
    (or pinned noise) falls back to ``eps_floor``. ``step_size`` overrides
    the rule entirely.
    """
    if sigma_i <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma_i}",
                              module=_MOD, param="sigma_i")
    if snr <= 0:
        raise ValidationError(f"snr must be positive, got {snr}", module=_MOD,
                              param="snr")

    s = provider(x, sigma_i).data
    if not np.all(np.isfinite(s.view(np.float64))):
        raise ValidationError(f"provider '{provider.label}' returned non-finite score",
                              module=_MOD, param="provider")
    z = complex_normal(x.shape, rng) if rng is not None else None

    if step_size is not None:
        eps = step_size
    else:
        s_norm = float(np.linalg.norm(s))
        z_norm = float(np.linalg.norm(z)) if z is not None else 0.0
        if s_norm > 0 and z_norm > 0:
            eps = 2.0 * (snr * z_norm / s_norm) ** 2
        else:
            eps = eps_floor
    data = x.data + eps * s
    if z is not None:
        data = data + np.sqrt(2.0 * eps) * z
    return x.with_data(data)


def data_consistency(x_gen: ComplexGrid, meas: Measurement,
                     lam: Optional[float] = None) -> ComplexGrid:
    """Re-impose acquired k-space samples on a generated estimate.

    Unsampled locations pass through untouched. Sampled locations become
    (y + lam * x_gen) / (1 + lam), or exactly y in hard mode (lam=None),
    which is idempotent.
    """
    if x_gen.shape != meas.y.shape:
        raise ValidationError("estimate/measurement shape mismatch",
                              module=_MOD, param="shape")
    if lam is not None and lam <= 0:
        raise ValidationError("dc lambda must be positive (or None for hard)",
                              module=_MOD, param="lam")
    out = x_gen.data.copy()
    idx = meas.pattern.mask == 1
    if lam is None:
        out[idx] = meas.y.data[idx]
    else:
        out[idx] = (meas.y.data[idx] + lam * out[idx]) / (1.0 + lam)
    return x_gen.with_data(out)


def _to_slot_space(x: ComplexGrid, transform: Transform) -> ComplexGrid:
    if isinstance(transform, Weighted):
        return apply_weight(x, transform.matrix)
    if isinstance(transform, Masked):
        return x.with_data(x.data * transform.mask.values)
    return x


def _from_slot_space(x_slot: ComplexGrid, x_prev: ComplexGrid,
                     transform: Transform, masked_writeback: str) -> ComplexGrid:
    if isinstance(transform, Weighted):
        return unweight(x_slot, transform.matrix)
    if isinstance(transform, Masked):
        m = transform.mask.values
        if masked_writeback == "replace":
            # masked region is replaced by the detail estimate
            return x_prev.with_data(x_prev.data * (1 - m) + x_slot.data * m)
        # literal residual form: x + m*(m*x - x_detail)
        return x_prev.with_data(x_prev.data + m * (m * x_prev.data - x_slot.data))
    return x_slot


def _slot_measurement(meas: Measurement, transform: Transform) -> Measurement:
    if isinstance(transform, Weighted):
        y = meas.y.with_data(meas.y.data * transform.matrix.values)
    elif isinstance(transform, Masked):
        y = meas.y.with_data(meas.y.data * transform.mask.values)
    else:
        return meas
    return Measurement(y=y, pattern=meas.pattern, noise_sd=meas.noise_sd)


def _check_transforms(meas: Measurement, cfg: ReconConfig) -> None:
    shape = meas.y.shape
    for k, slot in enumerate(cfg.slots):
        if isinstance(slot.transform, Weighted):
            t_shape = (slot.transform.matrix.height, slot.transform.matrix.width)
        elif isinstance(slot.transform, Masked):
            t_shape = (slot.transform.mask.height, slot.transform.mask.width)
        else:
            continue
        if t_shape != shape:
            raise ValidationError(
                f"slot {k} transform shape {t_shape} does not match measurement {shape}",
                module=_MOD, param="slots",
            )


def _slot_rngs(seed_key: tuple, n: int, shared: bool) -> list[np.random.Generator]:
    if shared:
        return [np.random.default_rng((*seed_key, 1)) for _ in range(n)]
    return [np.random.default_rng((*seed_key, k + 1)) for k in range(n)]


def _init_estimate(shape: tuple[int, int], sigma_max: float,
                   seed_key: tuple) -> ComplexGrid:
    rng = np.random.default_rng((*seed_key, 0))
    return ComplexGrid(sigma_max * complex_normal(shape, rng), Domain.KSPACE)


def _residual(x: ComplexGrid, meas: Measurement) -> float:
    return float(np.linalg.norm(x.data * meas.pattern.mask - meas.y.data))


def _slot_update(x_slot: ComplexGrid, slot: ModelSlot, slot_meas: Measurement,
                 cfg: ReconConfig, sigma_i: float, sigma_ip1: float,
                 rng: np.random.Generator) -> ComplexGrid:
    x_slot = predictor_step(x_slot, slot.provider, sigma_i, sigma_ip1, rng)
    x_slot = data_consistency(x_slot, slot_meas, cfg.dc_lambda)
    for _ in range(cfg.corrector_steps):
        x_slot = corrector_step(x_slot, slot.provider, sigma_i, cfg.snr, rng,
                                eps_floor=cfg.eps_floor)
        x_slot = data_consistency(x_slot, slot_meas, cfg.dc_lambda)
    return x_slot


def _cascade_run(meas: Measurement, cfg: ReconConfig, seed_key: tuple,
                 observer: Optional[Observer]) -> ReconResult:
    sig = cfg.schedule.sigmas
    x = _init_estimate(meas.y.shape, cfg.schedule.sigma_max, seed_key)
    slot_meas = [_slot_measurement(meas, s.transform) for s in cfg.slots]
    rngs = _slot_rngs(seed_key, len(cfg.slots), shared=False)

    diags = []
    for i in range(cfg.schedule.num_steps - 1, -1, -1):
        for k, slot in enumerate(cfg.slots):
            before = x
            try:
                xs = _to_slot_space(x, slot.transform)
                xs = _slot_update(xs, slot, slot_meas[k], cfg,
                                  float(sig[i]), float(sig[i + 1]), rngs[k])
                x = _from_slot_space(xs, before, slot.transform, cfg.masked_writeback)
            except ValidationError as exc:
                raise ValidationError(f"level {i}, slot {k}: {exc.args[0]}",
                                      module=_MOD, param="iterate") from exc
            if observer is not None:
                observer(i, k, before, x)
        diags.append(LevelDiag(i, float(sig[i]), _residual(x, meas)))
    return ReconResult(kspace=x, image=ifft2c(x), diagnostics=tuple(diags))


def _parallel_run(meas: Measurement, cfg: ReconConfig, seed_key: tuple,
                  observer: Optional[Observer],
                  shared_slot_rng: bool) -> ReconResult:
    sig = cfg.schedule.sigmas
    x = _init_estimate(meas.y.shape, cfg.schedule.sigma_max, seed_key)
    slot_meas = [_slot_measurement(meas, s.transform) for s in cfg.slots]
    rngs = _slot_rngs(seed_key, len(cfg.slots), shared=shared_slot_rng)

    diags = []
    for i in range(cfg.schedule.num_steps - 1, -1, -1):
        raw_outputs = []
        for k, slot in enumerate(cfg.slots):
            try:
                xs = _to_slot_space(x, slot.transform)
                xs = _slot_update(xs, slot, slot_meas[k], cfg,
                                  float(sig[i]), float(sig[i + 1]), rngs[k])
                out = _from_slot_space(xs, x, slot.transform, cfg.masked_writeback)
            except ValidationError as exc:
                raise ValidationError(f"level {i}, slot {k}: {exc.args[0]}",
                                      module=_MOD, param="iterate") from exc
            raw_outputs.append((slot, out))

        # structure outputs average into the base; each masked support is then
        # overwritten by the mean of the detail outputs covering it
        structure = [out.data for slot, out in raw_outputs
                     if not isinstance(slot.transform, Masked)]
        base = (np.mean(structure, axis=0) if structure else x.data).copy()
        cover = np.zeros(x.shape, dtype=np.float64)
        acc = np.zeros(x.shape, dtype=np.complex128)
        for slot, out in raw_outputs:
            if isinstance(slot.transform, Masked):
                m = slot.transform.mask.values
                acc += out.data * m
                cover += m
        covered = cover > 0
        base[covered] = acc[covered] / cover[covered]
        before = x
        x = data_consistency(ComplexGrid(base, Domain.KSPACE), meas, cfg.dc_lambda)
        if observer is not None:
            observer(i, -1, before, x)
        diags.append(LevelDiag(i, float(sig[i]), _residual(x, meas)))
    return ReconResult(kspace=x, image=ifft2c(x), diagnostics=tuple(diags))


def cascade_reconstruct(meas: Measurement, cfg: ReconConfig,
                        observer: Optional[Observer] = None) -> ReconResult:
    """Sequential multi-model reconstruction (structure first, then details).

    A single running k-space estimate flows through the slots within each
    noise level; each slot works in its own transform space with the
    measurement transformed alongside, and detail slots only ever write back
    on their mask support.
    """
    _check_transforms(meas, cfg)
    return _cascade_run(meas, cfg, (cfg.seed,), observer)


def parallel_reconstruct(meas: Measurement, cfg: ReconConfig,
                         observer: Optional[Observer] = None,
                         shared_slot_rng: bool = False) -> ReconResult:
    """All slots update from the shared iterate; outputs merge support-aware.

    Structure outputs average into the base estimate, each masked support is
    replaced by the mean of the detail outputs covering it, and one data
    consistency pass runs on the merged result. With hard data consistency a
    single-slot parallel run reproduces the cascade exactly (the extra DC is
    idempotent); with a soft lambda the two differ by that final pass.
    """
    _check_transforms(meas, cfg)
    return _parallel_run(meas, cfg, (cfg.seed,), observer, shared_slot_rng)


def reconstruct(meas: Measurement, cfg: ReconConfig,
                observer: Optional[Observer] = None) -> ReconResult:
    """Dispatch on cfg.combination."""
    if cfg.combination is Combination.PARALLEL:
        return parallel_reconstruct(meas, cfg, observer)
    return cascade_reconstruct(meas, cfg, observer)


def kdiff_threads() -> int:
    """Internal parallelism cap from the KDIFF_THREADS environment variable."""
    raw = os.environ.get("KDIFF_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n >= 1 else (os.cpu_count() or 1)


def reconstruct_many(measurements: Sequence[Measurement], cfg: ReconConfig,
                     threads: Optional[int] = None) -> list[ReconResult]:
    """Independent reconstructions (per coil or per posterior replica).

    Run j uses RNG streams derived from (cfg.seed, j), so results are
    reproducible regardless of thread count. Thread usage is capped by
    KDIFF_THREADS unless overridden.
    """
    for m in measurements:
        _check_transforms(m, cfg)
    if cfg.combination is Combination.PARALLEL:
        jobs = [(m, cfg, (cfg.seed, j), None, False)
                for j, m in enumerate(measurements)]
        run = lambda args: _parallel_run(*args)
    else:
        jobs = [(m, cfg, (cfg.seed, j), None) for j, m in enumerate(measurements)]
        run = lambda args: _cascade_run(*args)

    n_threads = threads if threads is not None else kdiff_threads()
    if n_threads <= 1 or len(jobs) <= 1:
        return [run(j) for j in jobs]
    with concurrent.futures.ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(run, jobs))


def pc_sample(provider: ScoreProvider, schedule: NoiseSchedule,
              shape: tuple[int, int], rng: np.random.Generator,
              corrector_steps: int = 1, snr: float = 0.16,
              eps_floor: float = 1e-12) -> ComplexGrid:
    """Unconditional predictor-corrector sampling (no measurement).

    Starts from N(0, sigma_max^2) and anneals down the full ladder.
    """
    sig = schedule.sigmas
    x = ComplexGrid(schedule.sigma_max * complex_normal(shape, rng), Domain.KSPACE)
    for i in range(schedule.num_steps - 1, -1, -1):
        x = predictor_step(x, provider, float(sig[i]), float(sig[i + 1]), rng)
        for _ in range(corrector_steps):
            x = corrector_step(x, provider, float(sig[i]), snr, rng,
                               eps_floor=eps_floor)
    return x
