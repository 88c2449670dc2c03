"""PSNR and SSIM for magnitude images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_MOD = "metrics"

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    psnr: float  # dB; math.inf when the images are identical
    ssim: float
    data_range: float


def _as_real_pair(ref, test, op: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(ref, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ValidationError(f"{op} expects two real grids of equal shape",
                              module=_MOD, param="shape")
    return a, b


def psnr(ref, test, data_range: float) -> float:
    """10 * log10(data_range^2 / MSE); +inf when the MSE is zero."""
    a, b = _as_real_pair(ref, test, "psnr")
    if data_range <= 0:
        raise ValidationError("data_range must be positive", module=_MOD,
                              param="data_range")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range**2 / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _windows(a: np.ndarray, size: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(a, (size, size))


def ssim(ref, test, data_range: float, window: int = SSIM_WINDOW,
         sigma: float = SSIM_SIGMA, k1: float = SSIM_K1,
         k2: float = SSIM_K2) -> float:
    """Mean structural similarity over valid Gaussian-window positions.

    Standard single-scale SSIM with C1 = (k1*data_range)^2 and
    C2 = (k2*data_range)^2. Only windows fully inside the image count.
    """
    a, b = _as_real_pair(ref, test, "ssim")
    if data_range <= 0:
        raise ValidationError("data_range must be positive", module=_MOD,
                              param="data_range")
    if a.shape[0] < window or a.shape[1] < window:
        raise ValidationError(
            f"grid {a.shape} smaller than the {window}x{window} window",
            module=_MOD, param="shape",
        )
    w = _gaussian_window(window, sigma)
    wa = _windows(a, window)
    wb = _windows(b, window)

    mu_a = np.einsum("ijkl,kl->ij", wa, w)
    mu_b = np.einsum("ijkl,kl->ij", wb, w)
    m_aa = np.einsum("ijkl,kl->ij", wa * wa, w)
    m_bb = np.einsum("ijkl,kl->ij", wb * wb, w)
    m_ab = np.einsum("ijkl,kl->ij", wa * wb, w)
    var_a = m_aa - mu_a**2
    var_b = m_bb - mu_b**2
    cov = m_ab - mu_a * mu_b

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def evaluate(ref, test, data_range: float | None = None) -> MetricReport:
    """Both metrics at once; data_range defaults to max(ref)."""
    a, b = _as_real_pair(ref, test, "evaluate")
    if data_range is None:
        data_range = float(a.max())
        if data_range <= 0:
            raise ValidationError("reference image has no positive values; "
                                  "pass data_range explicitly",
                                  module=_MOD, param="data_range")
    return MetricReport(psnr=psnr(a, b, data_range),
                        ssim=ssim(a, b, data_range),
                        data_range=float(data_range))
