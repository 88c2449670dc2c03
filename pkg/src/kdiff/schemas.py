"""Pydantic request/response models for the HTTP service.

Grid payloads travel as base64 float32 (same byte layout as the grid-file
format); report values are pre-formatted strings so non-finite floats survive
JSON.
"""

from __future__ import annotations

import base64
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from .errors import ValidationError
from .gridio import (decode_complex_payload, decode_real_payload,
                     encode_complex_payload, encode_real_payload)
from .grids import ComplexGrid, Domain


class GridPayload(BaseModel):
    height: int = Field(ge=1)
    width: int = Field(ge=1)
    domain: Literal["image", "kspace", "real"]
    data_b64: str

    @classmethod
    def from_grid(cls, grid: Union[ComplexGrid, np.ndarray]) -> "GridPayload":
        if isinstance(grid, ComplexGrid):
            return cls(height=grid.height, width=grid.width,
                       domain=grid.domain.value,
                       data_b64=base64.b64encode(
                           encode_complex_payload(grid.data)).decode("ascii"))
        arr = np.asarray(grid, dtype=np.float64)
        return cls(height=arr.shape[0], width=arr.shape[1], domain="real",
                   data_b64=base64.b64encode(
                       encode_real_payload(arr)).decode("ascii"))

    def to_grid(self) -> Union[ComplexGrid, np.ndarray]:
        raw = base64.b64decode(self.data_b64)
        per_pixel = 4 if self.domain == "real" else 8
        expected = self.height * self.width * per_pixel
        if len(raw) != expected:
            raise ValidationError(
                f"grid payload holds {len(raw)} bytes, expected {expected}",
                module="cli-io", param="data_b64")
        if self.domain == "real":
            return decode_real_payload(raw, self.height, self.width)
        data = decode_complex_payload(raw, self.height, self.width)
        domain = Domain.IMAGE if self.domain == "image" else Domain.KSPACE
        return ComplexGrid(data, domain)


class SlotPayload(BaseModel):
    kind: Literal["zero", "gaussian", "mlp"]
    transform: Literal["auto", "identity", "weighted", "mask"] = "auto"
    mean: Optional[GridPayload] = None
    variance: Optional[GridPayload] = None
    variance_value: Optional[float] = None
    weights_b64: Optional[str] = None


class MaskRequest(BaseModel):
    config_text: str = ""
    height: int = Field(ge=1)
    width: int = Field(ge=1)
    seed: Optional[int] = None


class MaskResponse(BaseModel):
    weight: GridPayload
    masks: list[GridPayload]
    report: dict[str, str]


class UndersampleRequest(BaseModel):
    config_text: str = ""
    grid: GridPayload
    seed: Optional[int] = None


class UndersampleResponse(BaseModel):
    pattern: GridPayload
    y: GridPayload
    report: dict[str, str]


class ReconstructRequest(BaseModel):
    config_text: str = ""
    y: GridPayload
    pattern: GridPayload
    slots: list[SlotPayload] = Field(default_factory=list)
    ref: Optional[GridPayload] = None
    seed: Optional[int] = None


class LevelDiagModel(BaseModel):
    level: int
    sigma: float
    residual: float


class ReconstructResponse(BaseModel):
    kspace: GridPayload
    image: GridPayload
    report: dict[str, str]
    diagnostics: list[LevelDiagModel]


class EvaluateRequest(BaseModel):
    ref: GridPayload
    test: GridPayload


class EvaluateResponse(BaseModel):
    report: dict[str, str]


class EntropyRequest(BaseModel):
    config_text: str = ""
    grid: GridPayload
    seed: Optional[int] = None


class EntropyResponse(BaseModel):
    report: dict[str, str]


class ErrorBody(BaseModel):
    error: str
    module: str = ""
    param: str = ""
