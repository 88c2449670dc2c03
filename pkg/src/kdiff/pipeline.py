"""End-to-end orchestration: config plus grids in, artifacts plus report out.

These functions are the single implementation behind both the HTTP service
handlers and (through the service) the CLI subcommands. Reports are flat
string-valued key=value maps so they serialize losslessly (inf stays "inf")
and print as scriptable text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .grids import ComplexGrid, Domain, ifft2c
from .masks import VirtualMask, entropy_report, make_circle_mask, \
    make_radial_mask, make_random_mask, make_random_mask_pair
from .metrics import evaluate as evaluate_metrics
from .metrics import psnr as psnr_metric
from .metrics import ssim as ssim_metric
from .patterns import Measurement, PatternKind, SamplingPattern, \
    apply_forward, gen_poisson2d, gen_random2d, gen_uniform
from .recon import Combination, Identity, Masked, ModelSlot, ReconConfig, \
    ReconResult, Weighted, reconstruct, reconstruct_many
from .runconfig import RunConfig, SlotSpec
from .scores import GaussianPrior, GaussianScore, MlpScore, ScoreProvider, \
    ZeroScore, make_schedule
from .weighting import WeightMatrix, make_weight

_MOD = "cli-io"

Report = dict[str, str]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def build_schedule(cfg: RunConfig):
    return make_schedule(cfg.sigma_min, cfg.sigma_max, cfg.n_levels)


def build_weight(cfg: RunConfig, height: int, width: int) -> WeightMatrix:
    return make_weight(height, width, cfg.weight_r, cfg.weight_p, cfg.weight_eps)


def build_masks(cfg: RunConfig, height: int, width: int,
                count: Optional[int] = None) -> list[VirtualMask]:
    """Detail masks per the configured family.

    Circle and radial masks are layered by the mask_a diameter list; random
    masks come as a disjoint pair when exactly two are needed.
    """
    n = count if count is not None else len(cfg.mask_a)
    if n < 1:
        return []
    if cfg.mask_shape in ("circle", "radial"):
        if len(cfg.mask_a) < n:
            raise ValidationError(
                f"need {n} mask_a entries for {n} detail masks, got {len(cfg.mask_a)}",
                module=_MOD, param="mask_a")
        if cfg.mask_shape == "circle":
            return [make_circle_mask(height, width, a, cfg.mask_complement)
                    for a in cfg.mask_a[:n]]
        return [make_radial_mask(height, width, cfg.mask_spokes,
                                 cfg.mask_spoke_width, inner_diameter=a,
                                 complement=cfg.mask_complement)
                for a in cfg.mask_a[:n]]
    if n == 2:
        m1, m2 = make_random_mask_pair(height, width, cfg.mask_coverage,
                                       cfg.mask_block, cfg.mask_seed)
        return [m1, m2]
    return [make_random_mask(height, width, cfg.mask_coverage, cfg.mask_block,
                             cfg.mask_seed + i, cfg.mask_complement)
            for i in range(n)]


def build_pattern(cfg: RunConfig, height: int, width: int) -> SamplingPattern:
    if cfg.pattern == "uniform":
        return gen_uniform(height, width, cfg.accel, cfg.acs,
                           cfg.uniform_offset, cfg.uniform_transpose)
    if cfg.pattern == "random":
        return gen_random2d(height, width, cfg.accel, cfg.acs, cfg.pattern_seed)
    return gen_poisson2d(height, width, cfg.accel, cfg.acs, cfg.pattern_seed)


@dataclass
class ResolvedSlot:
    """A slot spec with its payloads already in memory."""

    spec: SlotSpec
    mean: Optional[ComplexGrid] = None
    variance: Optional[np.ndarray] = None
    mlp: Optional[MlpScore] = None

    def provider(self, label: str) -> ScoreProvider:
        if self.spec.kind == "zero":
            return ZeroScore(label=label)
        if self.spec.kind == "gaussian":
            if self.mean is None or self.variance is None:
                raise ValidationError("gaussian slot payloads missing",
                                      module=_MOD, param="slots")
            return GaussianScore(GaussianPrior(self.mean, self.variance),
                                 label=label)
        if self.mlp is None:
            raise ValidationError("mlp slot payload missing", module=_MOD,
                                  param="slots")
        return MlpScore(self.mlp.weights, label=label)


def assemble_slots(cfg: RunConfig, resolved: Sequence[ResolvedSlot],
                   height: int, width: int) -> tuple[ModelSlot, ...]:
    """Pair providers with transforms.

    Auto rule: a lone slot runs untransformed; otherwise the first slot gets
    the radial weighting and the rest get the detail masks in order. Explicit
    identity/weighted/mask prefixes in the slot spec override.
    """
    transforms = []
    for i, rs in enumerate(resolved):
        t = rs.spec.transform
        if t == "auto":
            t = "identity" if len(resolved) == 1 else ("weighted" if i == 0 else "mask")
        transforms.append(t)

    n_masked = sum(1 for t in transforms if t == "mask")
    masks = build_masks(cfg, height, width, count=n_masked) if n_masked else []
    weight = build_weight(cfg, height, width) if "weighted" in transforms else None

    slots = []
    mask_idx = 0
    for i, (rs, t) in enumerate(zip(resolved, transforms)):
        provider = rs.provider(label=f"slot{i}:{rs.spec.kind}")
        if t == "identity":
            slots.append(ModelSlot(provider, Identity()))
        elif t == "weighted":
            slots.append(ModelSlot(provider, Weighted(weight)))
        else:
            slots.append(ModelSlot(provider, Masked(masks[mask_idx])))
            mask_idx += 1
    return tuple(slots)


def build_recon_config(cfg: RunConfig, slots: tuple[ModelSlot, ...],
                       seed: Optional[int] = None) -> ReconConfig:
    return ReconConfig(
        schedule=build_schedule(cfg),
        slots=slots,
        corrector_steps=cfg.corrector_steps,
        snr=cfg.snr,
        dc_lambda=cfg.dc,
        combination=(Combination.PARALLEL if cfg.combination == "parallel"
                     else Combination.CASCADE),
        seed=cfg.seed if seed is None else seed,
        masked_writeback=cfg.masked_writeback,
    )


def magnitude_image(grid) -> np.ndarray:
    """Magnitude image from whatever arrives: k-space is inverse-transformed."""
    if isinstance(grid, ComplexGrid):
        if grid.domain is Domain.KSPACE:
            grid = ifft2c(grid)
        return np.abs(grid.data)
    return np.abs(np.asarray(grid, dtype=np.float64))


@dataclass
class MaskArtifacts:
    weight: WeightMatrix
    masks: list[VirtualMask]
    report: Report


def run_mask(cfg: RunConfig, height: int, width: int) -> MaskArtifacts:
    weight = build_weight(cfg, height, width)
    masks = build_masks(cfg, height, width)
    report: Report = {
        "height": _fmt(height),
        "width": _fmt(width),
        "weight_r": _fmt(cfg.weight_r),
        "weight_p": _fmt(cfg.weight_p),
        "weight_eps": _fmt(cfg.weight_eps),
        "masks": _fmt(len(masks)),
    }
    for i, m in enumerate(masks, start=1):
        report[f"mask{i}_population"] = _fmt(m.population)
        report[f"mask{i}_fraction"] = _fmt(m.population / (height * width))
    if len(masks) >= 2:
        from .masks import relationship
        report["relationship"] = relationship(masks[0], masks[1]).value
    return MaskArtifacts(weight=weight, masks=masks, report=report)


@dataclass
class UndersampleArtifacts:
    pattern: SamplingPattern
    measurement: Measurement
    report: Report


def run_undersample(cfg: RunConfig, x: ComplexGrid) -> UndersampleArtifacts:
    pattern = build_pattern(cfg, x.height, x.width)
    meas = apply_forward(x, pattern, cfg.noise_sd, cfg.noise_seed)
    report: Report = {
        "kind": pattern.kind.value,
        "target_r": _fmt(pattern.target_r),
        "achieved_r": _fmt(pattern.achieved_r),
        "meets_target": _fmt(pattern.meets_target),
        "acs": _fmt(pattern.acs),
        "seed": _fmt(pattern.seed),
        "population": _fmt(pattern.population),
        "noise_sd": _fmt(cfg.noise_sd),
    }
    return UndersampleArtifacts(pattern=pattern, measurement=meas, report=report)


def pattern_from_mask(cfg: RunConfig, mask: np.ndarray) -> SamplingPattern:
    """Rehydrate a pattern from a serialized 0/1 grid."""
    mask = np.asarray(mask)
    if not np.all((mask == 0) | (mask == 1)):
        raise ValidationError("pattern grid must be exactly 0/1",
                              module=_MOD, param="pattern")
    pop = int(mask.sum())
    if pop == 0:
        raise ValidationError("pattern grid samples nothing", module=_MOD,
                              param="pattern")
    kind = {"poisson": PatternKind.POISSON2D, "random": PatternKind.RANDOM2D,
            "uniform": PatternKind.UNIFORM}[cfg.pattern]
    achieved = mask.size / pop
    meets = abs(achieved - cfg.accel) / cfg.accel <= 0.05
    return SamplingPattern(kind, mask.astype(np.uint8), cfg.accel, achieved,
                           cfg.acs, cfg.pattern_seed, meets)


@dataclass
class ReconstructArtifacts:
    result: ReconResult
    report: Report


def run_reconstruct(cfg: RunConfig, y: ComplexGrid, mask: np.ndarray,
                    resolved: Sequence[ResolvedSlot],
                    ref: Optional[ComplexGrid] = None,
                    seed: Optional[int] = None) -> ReconstructArtifacts:
    pattern = pattern_from_mask(cfg, mask)
    meas = Measurement(y=y, pattern=pattern, noise_sd=cfg.noise_sd)
    slots = assemble_slots(cfg, resolved, y.height, y.width)
    rcfg = build_recon_config(cfg, slots, seed=seed)
    if cfg.replicas > 1:
        # posterior-mean estimate: average independent reconstructions
        runs = reconstruct_many([meas] * cfg.replicas, rcfg)
        mean_k = ComplexGrid(np.mean([r.kspace.data for r in runs], axis=0),
                             Domain.KSPACE)
        result = ReconResult(kspace=mean_k, image=ifft2c(mean_k),
                             diagnostics=runs[0].diagnostics)
        final_residual = float(np.linalg.norm(
            mean_k.data * pattern.mask - meas.y.data))
    else:
        result = reconstruct(meas, rcfg)
        final_residual = result.diagnostics[-1].residual

    report: Report = {
        "combination": cfg.combination,
        "levels": _fmt(cfg.n_levels),
        "corrector_steps": _fmt(cfg.corrector_steps),
        "seed": _fmt(rcfg.seed),
        "dc": "hard" if cfg.dc is None else _fmt(cfg.dc),
        "slots": _fmt(len(slots)),
        "replicas": _fmt(cfg.replicas),
        "final_residual": _fmt(final_residual),
        "final_sigma": _fmt(result.diagnostics[-1].sigma),
    }
    if ref is not None:
        ref_img = magnitude_image(ref)
        test_img = magnitude_image(result.kspace)
        data_range = float(ref_img.max()) or 1.0
        report["psnr"] = _fmt(psnr_metric(ref_img, test_img, data_range))
        if min(ref_img.shape) >= 11:  # structural similarity needs its window
            report["ssim"] = _fmt(ssim_metric(ref_img, test_img, data_range))
        report["data_range"] = _fmt(data_range)
        rel_err = float(np.linalg.norm(test_img - ref_img)
                        / max(np.linalg.norm(ref_img), np.finfo(float).tiny))
        report["rel_l2_error"] = _fmt(rel_err)
    return ReconstructArtifacts(result=result, report=report)


def run_evaluate(ref, test) -> Report:
    ref_img = magnitude_image(ref)
    test_img = magnitude_image(test)
    metrics = evaluate_metrics(ref_img, test_img)
    return {
        "psnr": _fmt(metrics.psnr),
        "ssim": _fmt(metrics.ssim),
        "data_range": _fmt(metrics.data_range),
    }


def run_entropy(cfg: RunConfig, x: ComplexGrid) -> Report:
    masks = build_masks(cfg, x.height, x.width)
    if len(masks) < 2:
        raise ValidationError("entropy report needs at least two masks; "
                              "configure mask_a with two entries",
                              module=_MOD, param="mask_a")
    rep = entropy_report(x, masks[0], masks[1], cfg.entropy_bins)
    return {
        "e1": _fmt(rep.e1),
        "e2": _fmt(rep.e2),
        "total": _fmt(rep.total),
        "bins": _fmt(rep.bins),
        "relationship": rep.relation.value,
    }


def render_report(report: Report) -> str:
    return "".join(f"{k}={v}\n" for k, v in report.items())
