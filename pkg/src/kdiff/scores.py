"""Noise schedule, score providers, denoising-score-matching loss, MLP weights.

The forward corruption is variance exploding: x(sigma) = x(0) + sigma * z
with z circular complex standard normal and sigma running up a geometric
ladder. A score provider evaluates an estimate of the gradient of the noised
log density at a given sigma. Two analytic providers are built in (exact
Gaussian-prior score and the zero score); externally trained MLPs load from
a small binary weight format shared with the trainer.
"""

from __future__ import annotations

import abc
import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (MlpDimensionError, MlpMagicError, MlpValueError,
                     ValidationError)
from .grids import ComplexGrid

_MOD = "sde-score"


@dataclass(frozen=True)
class NoiseSchedule:
    """Geometric sigma ladder sigma_0 < ... < sigma_N."""

    sigma_min: float
    sigma_max: float
    num_steps: int
    sigmas: np.ndarray

    def __post_init__(self):
        sig = np.ascontiguousarray(np.asarray(self.sigmas, dtype=np.float64))
        sig.flags.writeable = False
        object.__setattr__(self, "sigmas", sig)


def make_schedule(sigma_min: float, sigma_max: float, num_steps: int) -> NoiseSchedule:
    """Geometric ladder of num_steps + 1 sigmas from sigma_min to sigma_max."""
    if not (0 < sigma_min < sigma_max):
        raise ValidationError(
            f"need 0 < sigma_min < sigma_max, got ({sigma_min}, {sigma_max})",
            module=_MOD, param="sigma_min",
        )
    if num_steps < 1:
        raise ValidationError(f"num_steps must be >= 1, got {num_steps}",
                              module=_MOD, param="num_steps")
    i = np.arange(num_steps + 1, dtype=np.float64)
    sigmas = sigma_min * (sigma_max / sigma_min) ** (i / num_steps)
    sigmas[0], sigmas[-1] = sigma_min, sigma_max
    return NoiseSchedule(float(sigma_min), float(sigma_max), num_steps, sigmas)


def complex_normal(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Circular complex normal: unit variance per real component."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def perturb(x: ComplexGrid, sigma: float, rng: np.random.Generator) -> ComplexGrid:
    """Forward corruption x + sigma * z; the identity at sigma = 0."""
    if sigma < 0:
        raise ValidationError(f"sigma must be nonnegative, got {sigma}",
                              module=_MOD, param="sigma")
    if sigma == 0:
        return x
    return x.with_data(x.data + sigma * complex_normal(x.shape, rng))


class ScoreProvider(abc.ABC):
    """Evaluates a score estimate for a grid at a given noise level."""

    label: str = "score"

    @abc.abstractmethod
    def score(self, x: ComplexGrid, sigma: float) -> ComplexGrid:
        """Return a grid of the same shape; must be finite for finite input."""

    def __call__(self, x: ComplexGrid, sigma: float) -> ComplexGrid:
        out = self.score(x, sigma)
        if out.shape != x.shape:
            raise ValidationError(
                f"provider '{self.label}' returned shape {out.shape} for input {x.shape}",
                module=_MOD, param="provider",
            )
        return out


@dataclass(frozen=True)
class GaussianPrior:
    """Independent per-pixel complex Gaussian: mean grid and variance grid.

    The variance applies to each real component, so a pixel at noise level
    sigma is distributed N(mean, variance + sigma^2) per component.
    """

    mean: ComplexGrid
    variance: np.ndarray

    def __post_init__(self):
        var = np.ascontiguousarray(np.asarray(self.variance, dtype=np.float64))
        if var.shape != self.mean.shape:
            raise ValidationError("prior mean/variance shape mismatch",
                                  module=_MOD, param="variance")
        if not np.all(var > 0):
            raise ValidationError("prior variance must be positive everywhere",
                                  module=_MOD, param="variance")
        var.flags.writeable = False
        object.__setattr__(self, "variance", var)

    @classmethod
    def isotropic(cls, mean: ComplexGrid, variance: float) -> "GaussianPrior":
        return cls(mean, np.full(mean.shape, float(variance)))


def gaussian_score(prior: GaussianPrior, x: ComplexGrid, sigma: float) -> ComplexGrid:
    """Exact noised score of a Gaussian prior: -(x - mean) / (variance + sigma^2)."""
    if sigma < 0:
        raise ValidationError(f"sigma must be nonnegative, got {sigma}",
                              module=_MOD, param="sigma")
    if x.shape != prior.mean.shape:
        raise ValidationError("grid/prior shape mismatch", module=_MOD, param="shape")
    return x.with_data(-(x.data - prior.mean.data) / (prior.variance + sigma**2))


class GaussianScore(ScoreProvider):
    """Analytic oracle provider wrapping a Gaussian prior."""

    def __init__(self, prior: GaussianPrior, label: str = "gaussian"):
        self.prior = prior
        self.label = label

    def score(self, x: ComplexGrid, sigma: float) -> ComplexGrid:
        return gaussian_score(self.prior, x, sigma)


class ZeroScore(ScoreProvider):
    """Provider that always answers zero; the do-nothing baseline."""

    def __init__(self, label: str = "zero"):
        self.label = label

    def score(self, x: ComplexGrid, sigma: float) -> ComplexGrid:
        return x.with_data(np.zeros(x.shape, dtype=np.complex128))


class FunctionScore(ScoreProvider):
    """Adapter for ad-hoc callables, mostly used in tests."""

    def __init__(self, fn: Callable[[ComplexGrid, float], ComplexGrid],
                 label: str = "fn"):
        self._fn = fn
        self.label = label

    def score(self, x: ComplexGrid, sigma: float) -> ComplexGrid:
        return self._fn(x, sigma)


def dsm_loss(provider: ScoreProvider, samples: Sequence[ComplexGrid],
             schedule: NoiseSchedule, rng: np.random.Generator,
             mc_draws: int = 1, weight_fn: str = "sigma2") -> float:
    """Monte-Carlo denoising-score-matching loss.

    For each draw: pick a schedule index uniformly, corrupt a clean sample,
    and penalize the squared distance between the provider output and the
    corruption-kernel score -z/sigma, weighted by lambda(sigma). With the
    default lambda = sigma^2 a zero provider scores E||z||^2 = 2*H*W.
    """
    samples = list(samples)
    if not samples:
        raise ValidationError("need at least one clean sample", module=_MOD,
                              param="samples")
    if mc_draws < 1:
        raise ValidationError(f"mc_draws must be >= 1, got {mc_draws}",
                              module=_MOD, param="mc_draws")
    if weight_fn not in ("sigma2", "one"):
        raise ValidationError(f"unknown weight_fn {weight_fn!r}", module=_MOD,
                              param="weight_fn")

    total = 0.0
    count = 0
    for _ in range(mc_draws):
        for x0 in samples:
            idx = int(rng.integers(0, schedule.sigmas.size))
            sigma = float(schedule.sigmas[idx])
            z = complex_normal(x0.shape, rng)
            x_t = x0.with_data(x0.data + sigma * z)
            target = -z / sigma
            diff = provider(x_t, sigma).data - target
            sq = float(np.sum(diff.real**2 + diff.imag**2))
            lam = sigma**2 if weight_fn == "sigma2" else 1.0
            total += lam * sq
            count += 1
    return total / count


# MLP weight interchange format, little-endian:
#   magic "MLPS", u32 version=1, u32 layer_count,
#   per layer: u32 in_dim, u32 out_dim, u8 activation (0=relu, 1=tanh, 2=none),
#   then all weight matrices row-major float32 (out_dim x in_dim each),
#   then all bias vectors float32.
_MLP_MAGIC = b"MLPS"
_MLP_VERSION = 1
_ACTIVATIONS = {0: "relu", 1: "tanh", 2: "none"}
_ACTIVATION_CODES = {v: k for k, v in _ACTIVATIONS.items()}


@dataclass(frozen=True)
class MlpLayer:
    weight: np.ndarray  # (out_dim, in_dim) float32
    bias: np.ndarray    # (out_dim,) float32
    activation: str


@dataclass(frozen=True)
class MlpScoreWeights:
    layers: tuple[MlpLayer, ...]

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def forward(self, vec: np.ndarray) -> np.ndarray:
        h = np.asarray(vec, dtype=np.float32)
        for layer in self.layers:
            h = layer.weight @ h + layer.bias
            if layer.activation == "relu":
                h = np.maximum(h, 0.0)
            elif layer.activation == "tanh":
                h = np.tanh(h)
        return h


def save_mlp(weights: MlpScoreWeights, path) -> None:
    """Reference writer for the MLP weight format."""
    with open(path, "wb") as fh:
        fh.write(_MLP_MAGIC)
        fh.write(struct.pack("<II", _MLP_VERSION, len(weights.layers)))
        for layer in weights.layers:
            out_dim, in_dim = layer.weight.shape
            fh.write(struct.pack("<IIB", in_dim, out_dim,
                                 _ACTIVATION_CODES[layer.activation]))
        for layer in weights.layers:
            fh.write(np.ascontiguousarray(layer.weight, dtype="<f4").tobytes())
        for layer in weights.layers:
            fh.write(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise MlpDimensionError(f"weight file truncated while reading {what}")
    return buf


def parse_mlp_weights(data: bytes) -> MlpScoreWeights:
    """Parse and validate MLP weights from raw bytes."""
    import io
    return _parse_mlp_stream(io.BytesIO(data))


def read_mlp_weights(path) -> MlpScoreWeights:
    """Parse and validate an MLP weight file."""
    with open(path, "rb") as fh:
        return _parse_mlp_stream(fh)


def _parse_mlp_stream(fh) -> MlpScoreWeights:
    magic = fh.read(4)
    if magic != _MLP_MAGIC:
        raise MlpMagicError(f"bad magic {magic!r}, expected {_MLP_MAGIC!r}")
    version, layer_count = struct.unpack("<II", _read_exact(fh, 8, "header"))
    if version != _MLP_VERSION:
        raise MlpMagicError(f"unsupported version {version}")
    if layer_count < 1 or layer_count > 1024:
        raise MlpDimensionError(f"implausible layer count {layer_count}")

    dims = []
    for i in range(layer_count):
        in_dim, out_dim, act = struct.unpack("<IIB", _read_exact(fh, 9, f"layer {i}"))
        if in_dim < 1 or out_dim < 1 or in_dim > 2**24 or out_dim > 2**24:
            raise MlpDimensionError(f"layer {i} has implausible dims {in_dim}x{out_dim}")
        if act not in _ACTIVATIONS:
            raise MlpDimensionError(f"layer {i} has unknown activation code {act}")
        dims.append((in_dim, out_dim, _ACTIVATIONS[act]))
    for i in range(1, layer_count):
        if dims[i][0] != dims[i - 1][1]:
            raise MlpDimensionError(
                f"layer {i} input dim {dims[i][0]} != previous output {dims[i - 1][1]}")

    mats = []
    for i, (in_dim, out_dim, _) in enumerate(dims):
        raw = _read_exact(fh, 4 * in_dim * out_dim, f"layer {i} weights")
        mats.append(np.frombuffer(raw, dtype="<f4").reshape(out_dim, in_dim))
    biases = []
    for i, (_, out_dim, _) in enumerate(dims):
        raw = _read_exact(fh, 4 * out_dim, f"layer {i} bias")
        biases.append(np.frombuffer(raw, dtype="<f4"))

    layers = []
    for (in_dim, out_dim, act), w, b in zip(dims, mats, biases):
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise MlpValueError("weight file contains non-finite values")
        layers.append(MlpLayer(weight=w, bias=b, activation=act))
    return MlpScoreWeights(tuple(layers))


class MlpScore(ScoreProvider):
    """Provider backed by loaded MLP weights.

    The network consumes [flatten(Re x), flatten(Im x), log sigma] and emits
    2*H*W reals reshaped back to a complex grid. Natural log.
    """

    def __init__(self, weights: MlpScoreWeights, label: str = "mlp"):
        self.weights = weights
        self.label = label

    def score(self, x: ComplexGrid, sigma: float) -> ComplexGrid:
        n = x.height * x.width
        if self.weights.in_dim != 2 * n + 1 or self.weights.out_dim != 2 * n:
            raise ValidationError(
                f"MLP expects in={self.weights.in_dim}/out={self.weights.out_dim}, "
                f"incompatible with a {x.height}x{x.width} grid",
                module=_MOD, param="weights",
            )
        vec = np.concatenate([x.data.real.ravel(), x.data.imag.ravel(),
                              [np.log(sigma)]]).astype(np.float32)
        out = self.weights.forward(vec).astype(np.float64)
        return x.with_data(out[:n].reshape(x.shape) + 1j * out[n:].reshape(x.shape))


def load_mlp(path, label: str = "mlp") -> MlpScore:
    """Load a weight file into a ready-to-use score provider."""
    return MlpScore(read_mlp_weights(path), label=label)
