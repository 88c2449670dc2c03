"""Command-line client for the reconstruction service.

Every subcommand is a thin client: it reads local files into request
payloads, posts them to the service (an in-process instance by default, or
a remote one via --server), and writes the returned grids and report under
--out. `kdiff serve` runs the service standalone.
"""

from __future__ import annotations

import argparse
import base64
import sys
from pathlib import Path

import numpy as np

from .errors import KdiffError, ValidationError
from .grids import ComplexGrid
from .gridio import read_grid, write_grid
from .runconfig import RunConfig, config_help, load_config
from .schemas import GridPayload, SlotPayload

_EPILOG = f"""run-config keys and defaults (key=value lines, '#' comments):
{config_help()}

slot specs (comma-separated under slots=):
  zero                              score is identically zero
  gaussian:<mean-file>[:<var>]      analytic Gaussian-prior score; <var> is a
                                    real grid file or a scalar (default 1.0)
  mlp:<weights-file>                trained MLP score weights
  an optional identity:/weighted:/mask: prefix pins the slot transform

environment:
  KDIFF_THREADS   caps internal parallelism for batched reconstructions
"""


class ServiceClient:
    """HTTP client; in-process ASGI when no server URL is given."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # starlette/httpx pairing notice
                from starlette.testclient import TestClient

                from .server import app
                self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code != 200:
            try:
                body = resp.json()
            except Exception:
                body = {"error": resp.text}
            raise ValidationError(body.get("error", "service error"),
                                  module=body.get("module", "cli-io"),
                                  param=body.get("param", ""))
        return resp.json()


def _load_cfg(args) -> tuple[RunConfig, str]:
    if args.config:
        path = Path(args.config)
        cfg = load_config(path)
        text = path.read_text(encoding="utf-8")
    else:
        cfg, text = RunConfig(), ""
    return cfg, text


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _payload_from_file(path: str) -> GridPayload:
    return GridPayload.from_grid(read_grid(path))


def _write_payload(payload: dict, path: Path) -> None:
    write_grid(GridPayload(**payload).to_grid(), path)


def _emit_report(report: dict[str, str], out: Path, name: str) -> None:
    text = "".join(f"{k}={v}\n" for k, v in report.items())
    (out / name).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _slot_payloads(cfg: RunConfig) -> list[dict]:
    payloads = []
    for spec in cfg.slot_specs():
        sp = SlotPayload(kind=spec.kind, transform=spec.transform)
        if spec.kind == "gaussian":
            mean = read_grid(spec.mean_path)
            if not isinstance(mean, ComplexGrid):
                raise ValidationError(
                    f"gaussian mean {spec.mean_path!r} must be a complex grid",
                    module="cli-io", param="slots")
            sp.mean = GridPayload.from_grid(mean)
            if spec.var_path is not None:
                var = read_grid(spec.var_path)
                if isinstance(var, ComplexGrid):
                    raise ValidationError(
                        f"variance {spec.var_path!r} must be a real grid",
                        module="cli-io", param="slots")
                sp.variance = GridPayload.from_grid(var)
            else:
                sp.variance_value = spec.var_value
        elif spec.kind == "mlp":
            raw = Path(spec.weights_path).read_bytes()
            sp.weights_b64 = base64.b64encode(raw).decode("ascii")
        payloads.append(sp.model_dump())
    return payloads


def cmd_mask(args) -> int:
    _, text = _load_cfg(args)
    client = ServiceClient(args.server)
    resp = client.post("/api/mask", {
        "config_text": text, "height": args.height, "width": args.width,
        "seed": args.seed,
    })
    out = _out_dir(args)
    _write_payload(resp["weight"], out / "weight.ksp")
    for i, mask in enumerate(resp["masks"], start=1):
        _write_payload(mask, out / f"mask_{i}.ksp")
    _emit_report(resp["report"], out, "mask_report.txt")
    return 0


def cmd_undersample(args) -> int:
    _, text = _load_cfg(args)
    client = ServiceClient(args.server)
    resp = client.post("/api/undersample", {
        "config_text": text, "grid": _payload_from_file(args.input).model_dump(),
        "seed": args.seed,
    })
    out = _out_dir(args)
    _write_payload(resp["pattern"], out / "pattern.ksp")
    _write_payload(resp["y"], out / "y.ksp")
    meta = "".join(f"{k}={v}\n" for k, v in resp["report"].items())
    (out / "pattern.meta").write_text(meta, encoding="utf-8")
    _emit_report(resp["report"], out, "undersample_report.txt")
    return 0


def cmd_reconstruct(args) -> int:
    cfg, text = _load_cfg(args)
    client = ServiceClient(args.server)
    payload = {
        "config_text": text,
        "y": _payload_from_file(args.y).model_dump(),
        "pattern": _payload_from_file(args.pattern).model_dump(),
        "slots": _slot_payloads(cfg),
        "seed": args.seed,
    }
    if args.ref:
        payload["ref"] = _payload_from_file(args.ref).model_dump()
    resp = client.post("/api/reconstruct", payload)
    out = _out_dir(args)
    _write_payload(resp["kspace"], out / "recon_kspace.ksp")
    _write_payload(resp["image"], out / "recon_image.ksp")
    _emit_report(resp["report"], out, "reconstruct_report.txt")
    return 0


def cmd_evaluate(args) -> int:
    client = ServiceClient(args.server)
    resp = client.post("/api/evaluate", {
        "ref": _payload_from_file(args.ref).model_dump(),
        "test": _payload_from_file(args.test).model_dump(),
    })
    out = _out_dir(args)
    _emit_report(resp["report"], out, "evaluate_report.txt")
    return 0


def cmd_entropy(args) -> int:
    _, text = _load_cfg(args)
    client = ServiceClient(args.server)
    resp = client.post("/api/entropy", {
        "config_text": text, "grid": _payload_from_file(args.input).model_dump(),
        "seed": args.seed,
    })
    out = _out_dir(args)
    _emit_report(resp["report"], out, "entropy_report.txt")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdiff",
        description="multi-model k-space diffusion reconstruction",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", help="run-config file (key=value lines)")
            p.add_argument("--seed", type=int, default=None,
                           help="override every seed in the config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--server", default=None,
                       help="service URL; defaults to an in-process instance")

    p = sub.add_parser("mask", help="build the weight matrix and virtual masks")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    common(p)
    p.set_defaults(fn=cmd_mask)

    p = sub.add_parser("undersample", help="generate a pattern and measure a grid")
    p.add_argument("input", help="fully sampled grid file (image or k-space)")
    common(p)
    p.set_defaults(fn=cmd_undersample)

    p = sub.add_parser("reconstruct", help="run the multi-model reconstruction")
    p.add_argument("y", help="undersampled k-space grid file")
    p.add_argument("pattern", help="0/1 sampling pattern grid file")
    p.add_argument("--ref", help="fully sampled reference for metrics")
    common(p)
    p.set_defaults(fn=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="PSNR/SSIM between two grids")
    p.add_argument("ref")
    p.add_argument("test")
    common(p, needs_config=False)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("entropy", help="masked-entropy report for a k-space grid")
    p.add_argument("input", help="k-space grid file")
    common(p)
    p.set_defaults(fn=cmd_entropy)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        sys.stderr.write(f"error module={exc.module or 'cli-io'} "
                         f"param={exc.param}: {exc.args[0]}\n")
        return 1
    except KdiffError as exc:
        sys.stderr.write(f"error module=cli-io param=: {exc}\n")
        return 1
    except FileNotFoundError as exc:
        sys.stderr.write(f"error module=cli-io param=path: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
