"""FastAPI service wrapping the reconstruction pipeline.

Stateless: every request carries its run configuration (the same key=value
text the CLI reads) plus all grid payloads inline, so any number of clients
can share one instance.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import pipeline
from .errors import KdiffError, ValidationError
from .grids import ComplexGrid, Domain, fft2c
from .runconfig import RunConfig, parse_config
from .schemas import (EntropyRequest, EntropyResponse, EvaluateRequest,
                      EvaluateResponse, GridPayload, LevelDiagModel,
                      MaskRequest, MaskResponse, ReconstructRequest,
                      ReconstructResponse, SlotPayload, UndersampleRequest,
                      UndersampleResponse)
from .scores import MlpScore, parse_mlp_weights

app = FastAPI(title="kdiff", description="multi-model k-space diffusion reconstruction")


@app.exception_handler(KdiffError)
async def _kdiff_error_handler(request: Request, exc: KdiffError):
    body = {"error": str(exc), "module": "", "param": ""}
    if isinstance(exc, ValidationError):
        body["error"] = str(exc.args[0])
        body["module"] = exc.module
        body["param"] = exc.param
    return JSONResponse(status_code=422, content=body)


def _config(text: str, seed) -> RunConfig:
    cfg = parse_config(text)
    if seed is not None:
        cfg.seed = seed
        cfg.pattern_seed = seed
        cfg.noise_seed = seed
        cfg.mask_seed = seed
    return cfg


def _as_kspace(payload: GridPayload) -> ComplexGrid:
    grid = payload.to_grid()
    if not isinstance(grid, ComplexGrid):
        raise ValidationError("expected a complex grid payload",
                              module="cli-io", param="grid")
    if grid.domain is Domain.IMAGE:
        grid = fft2c(grid)
    return grid


def _resolve_slot(sp: SlotPayload) -> pipeline.ResolvedSlot:
    import base64

    from .runconfig import SlotSpec

    spec = SlotSpec(kind=sp.kind, transform=sp.transform)
    resolved = pipeline.ResolvedSlot(spec=spec)
    if sp.kind == "gaussian":
        if sp.mean is None:
            raise ValidationError("gaussian slot needs a mean grid",
                                  module="cli-io", param="slots")
        mean = sp.mean.to_grid()
        if not isinstance(mean, ComplexGrid):
            raise ValidationError("gaussian mean must be a complex grid",
                                  module="cli-io", param="slots")
        resolved.mean = mean
        if sp.variance is not None:
            var = sp.variance.to_grid()
            if isinstance(var, ComplexGrid):
                raise ValidationError("variance payload must be real",
                                      module="cli-io", param="slots")
            resolved.variance = var
        else:
            value = 1.0 if sp.variance_value is None else sp.variance_value
            resolved.variance = np.full(mean.shape, float(value))
    elif sp.kind == "mlp":
        if not sp.weights_b64:
            raise ValidationError("mlp slot needs weights_b64",
                                  module="cli-io", param="slots")
        resolved.mlp = MlpScore(parse_mlp_weights(base64.b64decode(sp.weights_b64)))
    return resolved


@app.get("/healthz")
async def healthz():
    return {"status": "ok"}


@app.post("/api/mask", response_model=MaskResponse)
async def mask_endpoint(req: MaskRequest) -> MaskResponse:
    cfg = _config(req.config_text, req.seed)
    art = pipeline.run_mask(cfg, req.height, req.width)
    return MaskResponse(
        weight=GridPayload.from_grid(art.weight.values),
        masks=[GridPayload.from_grid(m.values.astype(np.float64))
               for m in art.masks],
        report=art.report,
    )


@app.post("/api/undersample", response_model=UndersampleResponse)
async def undersample_endpoint(req: UndersampleRequest) -> UndersampleResponse:
    cfg = _config(req.config_text, req.seed)
    x = _as_kspace(req.grid)
    art = pipeline.run_undersample(cfg, x)
    return UndersampleResponse(
        pattern=GridPayload.from_grid(art.pattern.mask.astype(np.float64)),
        y=GridPayload.from_grid(art.measurement.y),
        report=art.report,
    )


@app.post("/api/reconstruct", response_model=ReconstructResponse)
async def reconstruct_endpoint(req: ReconstructRequest) -> ReconstructResponse:
    cfg = _config(req.config_text, req.seed)
    y = _as_kspace(req.y)
    mask = req.pattern.to_grid()
    if isinstance(mask, ComplexGrid):
        raise ValidationError("pattern payload must be a real 0/1 grid",
                              module="cli-io", param="pattern")
    if req.slots:
        resolved = [_resolve_slot(sp) for sp in req.slots]
    else:
        # config must then be payload-free (zero providers only)
        resolved = []
        for spec in cfg.slot_specs():
            if spec.kind != "zero":
                raise ValidationError(
                    f"slot kind {spec.kind!r} needs an inline payload",
                    module="cli-io", param="slots")
            resolved.append(pipeline.ResolvedSlot(spec=spec))
    ref = _as_kspace(req.ref) if req.ref is not None else None
    art = pipeline.run_reconstruct(cfg, y, mask, resolved, ref=ref)
    return ReconstructResponse(
        kspace=GridPayload.from_grid(art.result.kspace),
        image=GridPayload.from_grid(art.result.image),
        report=art.report,
        diagnostics=[LevelDiagModel(level=d.level, sigma=d.sigma,
                                    residual=d.residual)
                     for d in art.result.diagnostics],
    )


@app.post("/api/evaluate", response_model=EvaluateResponse)
async def evaluate_endpoint(req: EvaluateRequest) -> EvaluateResponse:
    report = pipeline.run_evaluate(req.ref.to_grid(), req.test.to_grid())
    return EvaluateResponse(report=report)


@app.post("/api/entropy", response_model=EntropyResponse)
async def entropy_endpoint(req: EntropyRequest) -> EntropyResponse:
    cfg = _config(req.config_text, req.seed)
    x = _as_kspace(req.grid)
    report = pipeline.run_entropy(cfg, x)
    return EntropyResponse(report=report)
