"""Plain-text key=value run configuration.

One flat namespace, '#' comments, unknown keys rejected. Defaults follow the
reconstruction-stage settings used throughout: sigma ladder 0.01..378 over
1000 levels, one corrector step, radial weight cutoff r=0.075, hard data
consistency. `kdiff --help` documents every key.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

from .errors import ValidationError

_MOD = "cli-io"


@dataclass
class SlotSpec:
    """Parsed provider spec: zero | gaussian:<mean>:<var> | mlp:<file>."""

    kind: str                       # "zero" | "gaussian" | "mlp"
    mean_path: Optional[str] = None
    var_path: Optional[str] = None  # file path, or None when var_value is set
    var_value: Optional[float] = None
    weights_path: Optional[str] = None
    transform: str = "auto"         # "auto" | "identity" | "weighted" | "mask"


def parse_slot_spec(text: str) -> SlotSpec:
    parts = text.strip().split(":")
    transform = "auto"
    if parts and parts[0] in ("identity", "weighted", "mask"):
        transform = parts[0]
        parts = parts[1:]
    if not parts:
        raise ValidationError(f"empty slot spec {text!r}", module=_MOD, param="slots")
    kind = parts[0]
    if kind == "zero":
        if len(parts) != 1:
            raise ValidationError(f"zero slot takes no arguments: {text!r}",
                                  module=_MOD, param="slots")
        return SlotSpec(kind="zero", transform=transform)
    if kind == "gaussian":
        if len(parts) < 2 or len(parts) > 3:
            raise ValidationError(
                f"gaussian slot needs gaussian:<mean-file>[:<var-file-or-scalar>]: {text!r}",
                module=_MOD, param="slots")
        spec = SlotSpec(kind="gaussian", mean_path=parts[1], transform=transform)
        if len(parts) == 3:
            try:
                spec.var_value = float(parts[2])
            except ValueError:
                spec.var_path = parts[2]
        else:
            spec.var_value = 1.0
        return spec
    if kind == "mlp":
        if len(parts) != 2:
            raise ValidationError(f"mlp slot needs mlp:<weights-file>: {text!r}",
                                  module=_MOD, param="slots")
        return SlotSpec(kind="mlp", weights_path=parts[1], transform=transform)
    raise ValidationError(f"unknown slot kind {kind!r}", module=_MOD, param="slots")


@dataclass
class RunConfig:
    # noise schedule
    sigma_min: float = 0.01
    sigma_max: float = 378.0
    n_levels: int = 1000
    # sampler
    corrector_steps: int = 1
    snr: float = 0.16
    dc: Optional[float] = None          # None = hard
    masked_writeback: str = "replace"
    # k-space weighting (structure slot)
    weight_r: float = 0.075
    weight_p: float = 0.5
    weight_eps: float = 1e-6
    # virtual masks (detail slots)
    mask_shape: str = "circle"          # circle | radial | random
    mask_a: tuple[float, ...] = (20.0, 10.0)
    mask_spokes: int = 8
    mask_spoke_width: float = 3.0
    mask_inner_diameter: float = 10.0
    mask_coverage: float = 0.2
    mask_block: int = 4
    mask_seed: int = 0
    mask_complement: bool = False
    # undersampling pattern
    pattern: str = "poisson"            # poisson | random | uniform
    accel: float = 10.0
    acs: int = 0
    pattern_seed: int = 0
    uniform_offset: int = 0
    uniform_transpose: bool = False
    noise_sd: float = 0.0
    noise_seed: int = 0
    # model roster
    slots: tuple[str, ...] = ("zero",)
    combination: str = "cascade"        # cascade | parallel
    seed: int = 0
    replicas: int = 1                   # >1 averages independent runs
    # entropy
    entropy_bins: int = 256

    def slot_specs(self) -> list[SlotSpec]:
        return [parse_slot_spec(s) for s in self.slots]


_BOOL_KEYS = {"mask_complement", "uniform_transpose"}
_INT_KEYS = {"n_levels", "corrector_steps", "mask_spokes", "mask_block",
             "mask_seed", "acs", "pattern_seed", "uniform_offset",
             "noise_seed", "seed", "entropy_bins", "replicas"}
_FLOAT_KEYS = {"sigma_min", "sigma_max", "snr", "weight_r", "weight_p",
               "weight_eps", "mask_spoke_width", "mask_inner_diameter",
               "mask_coverage", "accel", "noise_sd"}
_LIST_KEYS = {"mask_a", "slots"}
_STR_KEYS = {"mask_shape", "pattern", "combination", "masked_writeback"}
_KNOWN = _BOOL_KEYS | _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _STR_KEYS | {"dc"}


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"key {key}: expected a boolean, got {raw!r}",
                          module=_MOD, param=key)


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValidationError(f"line {lineno}: expected key=value, got {line!r}",
                                  module=_MOD, param="config")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _KNOWN:
            raise ValidationError(f"line {lineno}: unknown key {key!r}",
                                  module=_MOD, param=key)
        try:
            if key == "dc":
                value = None if raw.lower() == "hard" else float(raw)
                if value is not None and value <= 0:
                    raise ValueError("dc must be positive or 'hard'")
            elif key in _BOOL_KEYS:
                value = _parse_bool(key, raw)
            elif key in _INT_KEYS:
                value = int(raw)
            elif key in _FLOAT_KEYS:
                value = float(raw)
            elif key == "mask_a":
                value = tuple(float(v) for v in raw.split(",") if v.strip())
            elif key == "slots":
                value = tuple(v.strip() for v in raw.split(",") if v.strip())
            else:
                value = raw
        except ValidationError:
            raise
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: key {key}: {exc}",
                                  module=_MOD, param=key) from exc
        setattr(cfg, key, value)

    if cfg.mask_shape not in ("circle", "radial", "random"):
        raise ValidationError(f"unknown mask_shape {cfg.mask_shape!r}",
                              module=_MOD, param="mask_shape")
    if cfg.pattern not in ("poisson", "random", "uniform"):
        raise ValidationError(f"unknown pattern {cfg.pattern!r}",
                              module=_MOD, param="pattern")
    if cfg.combination not in ("cascade", "parallel"):
        raise ValidationError(f"unknown combination {cfg.combination!r}",
                              module=_MOD, param="combination")
    if cfg.replicas < 1:
        raise ValidationError("replicas must be >= 1", module=_MOD,
                              param="replicas")
    cfg.slot_specs()  # validate slot grammar eagerly
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_help() -> str:
    """One line per key with its default, for --help output."""
    cfg = RunConfig()
    lines = []
    for f in fields(RunConfig):
        default = getattr(cfg, f.name)
        if f.name == "dc":
            default = "hard"
        elif isinstance(default, tuple):
            default = ",".join(str(v) for v in default)
        lines.append(f"  {f.name}={default}")
    return "\n".join(lines)
