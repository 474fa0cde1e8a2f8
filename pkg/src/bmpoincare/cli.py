"""Command-line entry point.

Exit codes: 0 pass, 1 usage error, 2 inequality or invariant failure,
3 invalid body, 4 I/O failure.
"""

import argparse
import contextlib
import logging
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import poincare, variation
from .body import (BodySpecError, InvalidBodyError, SupportFunction, body_dim, parse_body_spec,
                   reverse_weingarten, spec_to_dict, validate_C2plus, volume)
from .harmonics import build_basis, harmonic_function
from .report import emit_report
from .sphere import LinearField, build_quadrature

log = logging.getLogger(__name__)

EXIT_PASS, EXIT_USAGE, EXIT_FAIL, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3, 4
COMMANDS = ("validate", "volume", "bm-scan", "variation", "poincare", "lichnerowicz", "equality", "dump-forms")
DEFAULT_RESOLUTION = {2: 128, 3: 32}
DEFAULT_DEGREE = 8
MATRICES = ("A", "B", "ell", "G", "D")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    body: object
    dim: int
    resolution: int
    basis_degree: int = DEFAULT_DEGREE
    tolerance: float = poincare.DEFAULT_TOL
    body2: object = None
    output_path: str = None
    format: str = "json"
    phi: str = None
    u0: tuple = None
    points: int = variation.DEFAULT_POINTS
    matrix: str = "B"
    timing: bool = True

    def check(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not self.tolerance > 0:
            raise UsageError("tolerance must be positive")
        if self.command == "bm-scan" and self.body2 is None:
            raise UsageError("bm-scan needs --body2")
        if self.command == "equality" and self.u0 is None:
            raise UsageError("equality needs --u0")
        if self.format == "csv" and self.command != "dump-forms":
            raise UsageError("csv output is only available for dump-forms")
        if self.u0 is not None and len(self.u0) != self.dim:
            raise UsageError(f"--u0 needs {self.dim} components")
        for spec in (self.body, self.body2):
            if spec is not None:
                d = body_dim(spec)
                if d is not None and d != self.dim:
                    raise UsageError(f"body lives in R^{d} but --dim is {self.dim}")

    def inputs(self):
        out = {
            "body": spec_to_dict(self.body),
            "dim": self.dim,
            "resolution": self.resolution,
            "basis_degree": self.basis_degree,
            "tolerance": self.tolerance,
        }
        if self.body2 is not None:
            out["body2"] = spec_to_dict(self.body2)
        if self.command == "variation":
            out["phi"] = self.phi if self.u0 is None else None
        if self.u0 is not None:
            out["u0"] = list(self.u0)
        if self.command == "bm-scan":
            out["points"] = self.points
        if self.command == "dump-forms" and self.format == "csv":
            out["matrix"] = self.matrix
        return out


def _report_to_scalars(rep, prefix=""):
    out = {prefix + k: v for k, v in rep.scalars.items()}
    out.update({prefix + "multiplicity." + k: v for k, v in rep.multiplicities.items()})
    return out, {prefix + k: v for k, v in rep.flags.items()}


def _cmd_validate(cfg, h, quad):
    ok, m = validate_C2plus(h, quad)
    return {"min_eigenvalue": m}, {"c2plus": ok}


def _cmd_volume(cfg, h, quad):
    w = reverse_weingarten(h, quad)
    return {"volume": volume(h, quad, w), "min_eigenvalue": w.min_eigenvalue}, {"c2plus": w.valid}


def _cmd_bm_scan(cfg, h, quad):
    h1 = SupportFunction(cfg.body2)
    scan = variation.bm_concavity_scan(h, h1, quad, np.linspace(0.0, 1.0, cfg.points))
    scale = float(np.max(np.abs(scan.g)))
    scalars = {"t": scan.t, "g": scan.g, "min_margin": scan.min_margin,
               "argmin_pair": [float(scan.t[i]) for i in scan.argmin]}
    return scalars, {"concave": scan.min_margin >= -cfg.tolerance * scale}


def _phi(cfg, h):
    if cfg.u0 is not None:
        return LinearField(cfg.u0)
    key = cfg.phi or ("2" if cfg.dim == 2 else "2,0")
    if key == "h":
        return h
    try:
        return harmonic_function(cfg.dim, key)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_variation(cfg, h, quad):
    phi = _phi(cfg, h)
    v = variation.variation_profile(h, phi, quad)
    n = cfg.dim
    terms = abs((1 / n) * (1 / n - 1) * v.f0 ** (1 / n - 2) * v.f1**2) + abs((1 / n) * v.f0 ** (1 / n - 1) * v.f2)
    scalars = {"f0": v.f0, "f1": v.f1, "f2": v.f2, "g2": v.g2, "safe_step": v.safe_step}
    eps1, eps2 = 1e-4, 1e-3
    if np.isfinite(v.safe_step) and v.safe_step < 2 * eps2:
        eps1 = eps2 = 0.25 * v.safe_step
    scalars["fd_f1"] = variation.fd_first_variation(h, phi, quad, eps1)
    scalars["fd_f2"] = variation.fd_second_variation(h, phi, quad, eps2)
    return scalars, {"concave": v.g2 <= cfg.tolerance * max(terms, np.finfo(float).tiny)}


def _cmd_poincare(cfg, h, quad):
    basis = build_basis(cfg.dim, cfg.basis_degree)
    forms = poincare.assemble_forms(h, basis, quad)
    s1, f1 = _report_to_scalars(poincare.verify_T2(h, basis, quad, cfg.tolerance, forms))
    s2, f2 = _report_to_scalars(poincare.verify_T1(h, basis, quad, cfg.tolerance, forms), "boundary.")
    return {**s1, **s2}, {**f1, **f2}


def _cmd_lichnerowicz(cfg, h, quad):
    basis = build_basis(cfg.dim, cfg.basis_degree)
    return _report_to_scalars(poincare.lichnerowicz_check(h, basis, quad, cfg.tolerance))


def _cmd_equality(cfg, h, quad):
    return _report_to_scalars(poincare.equality_case_check(h, cfg.u0, quad, cfg.tolerance))


def _cmd_dump_forms(cfg, h, quad):
    basis = build_basis(cfg.dim, cfg.basis_degree)
    forms = poincare.assemble_forms(h, basis, quad)
    scalars = dict(forms.as_dict())
    scalars["basis_keys"] = basis.keys
    return scalars, {}


HANDLERS = {
    "validate": _cmd_validate,
    "volume": _cmd_volume,
    "bm-scan": _cmd_bm_scan,
    "variation": _cmd_variation,
    "poincare": _cmd_poincare,
    "lichnerowicz": _cmd_lichnerowicz,
    "equality": _cmd_equality,
    "dump-forms": _cmd_dump_forms,
}


def run(cfg):
    """Execute one command; returns ``(exit_code, report_dict)``."""
    cfg.check()
    start = time.perf_counter()
    quad = build_quadrature(cfg.dim, cfg.resolution)
    h = SupportFunction(cfg.body)
    try:
        if cfg.command != "validate":
            for spec in (cfg.body, cfg.body2):
                if spec is not None:
                    ok, m = validate_C2plus(SupportFunction(spec), quad)
                    if not ok:
                        raise InvalidBodyError(f"min eigenvalue of Q is {m:.6g}")
        scalars, flags = HANDLERS[cfg.command](cfg, h, quad)
        if cfg.command == "validate" and not flags["c2plus"]:
            code = EXIT_INVALID
        else:
            code = EXIT_PASS if all(flags.values()) else EXIT_FAIL
    except InvalidBodyError as exc:
        log.error("invalid body: %s", exc)
        ok, m = validate_C2plus(h, quad)
        scalars, flags = {"min_eigenvalue": m}, {"c2plus": False}
        code = EXIT_INVALID
    except poincare.IndefiniteFormError as exc:
        log.error("%s; try a finer resolution", exc)
        scalars, flags = {}, {"B_positive_definite": False}
        code = EXIT_FAIL
    flags["pass"] = code == EXIT_PASS
    elapsed = (time.perf_counter() - start) * 1e3
    report = {
        "command": cfg.command,
        "inputs": cfg.inputs(),
        "scalars": scalars,
        "flags": {k: bool(v) for k, v in flags.items()},
        "timing_ms": {"total": elapsed} if cfg.timing else None,
    }
    return code, report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vector(text):
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    parser = _Parser(prog="bmpoincare", description="Support-function toolkit for convex bodies: "
                     "volume, Brunn-Minkowski concavity and Poincare-type inequalities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--body", required=True, help="body JSON file, or an inline JSON object")
        if name == "bm-scan":
            p.add_argument("--body2", required=True, help="second body for the Minkowski segment")
            p.add_argument("--points", type=int, default=variation.DEFAULT_POINTS)
        if name == "variation":
            p.add_argument("--phi", help="harmonic key ('k' for n=2, 'l,m' for n=3) or 'h'")
        if name in ("variation", "equality"):
            p.add_argument("--u0", type=_vector, required=name == "equality",
                           help="direction u0 for phi(u) = (u, u0), comma separated")
        if name == "dump-forms":
            p.add_argument("--matrix", choices=MATRICES, default="B", help="matrix written in csv format")
        p.add_argument("--dim", type=int, choices=(2, 3), help="ambient dimension (inferred from the body if omitted)")
        p.add_argument("-r", "--resolution", type=int)
        p.add_argument("-L", "--basis-degree", type=int, default=DEFAULT_DEGREE)
        p.add_argument("--tol", type=float, default=poincare.DEFAULT_TOL)
        p.add_argument("-o", "--output")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--no-timing", action="store_true", help="write timing_ms as null (byte-stable reports)")
    return parser


def _load_body(text):
    if text.lstrip().startswith("{"):
        return parse_body_spec(text)
    with open(text, encoding="utf-8") as fh:
        return parse_body_spec(fh.read())


def config_from_args(args):
    body = _load_body(args.body)
    body2 = _load_body(args.body2) if getattr(args, "body2", None) else None
    dim = args.dim or body_dim(body) or (body_dim(body2) if body2 is not None else None) or 3
    resolution = args.resolution or DEFAULT_RESOLUTION[dim]
    if resolution < 4:
        raise UsageError("resolution must be >= 4")
    if args.basis_degree < 1:
        raise UsageError("basis degree must be >= 1")
    return RunConfig(
        command=args.command, body=body, body2=body2, dim=dim, resolution=resolution,
        basis_degree=args.basis_degree, tolerance=args.tol, output_path=args.output, format=args.format,
        phi=getattr(args, "phi", None), u0=getattr(args, "u0", None),
        points=getattr(args, "points", variation.DEFAULT_POINTS),
        matrix=getattr(args, "matrix", "B"), timing=not args.no_timing,
    )


def _limit_threads():
    cap = os.environ.get("BMP_THREADS")
    if not cap:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(cap))


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        with _limit_threads():
            code, report = run(cfg)
    except (UsageError, BodySpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: cannot read body: {exc}", file=sys.stderr)
        return EXIT_USAGE
    matrix = report["scalars"].get(cfg.matrix) if cfg.format == "csv" else None
    try:
        emit_report(report, cfg.format, cfg.output_path, matrix)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
