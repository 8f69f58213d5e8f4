"""Command line front end: batch drivers for the experiment families with
deterministic CSV/JSON reports.

Exit codes: 0 success, 2 precondition/usage failure, 3 numerical failure.
Complex numbers are serialized as "a+bi"; CSV uses '.' decimals, ','
delimiters, LF line endings and 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .coupling import Coupling, classify, rescale_magnetic, \
    rescale_squeezed
from .dirac import dirac_rep
from .errors import NumericalError, PreconditionError
from .fiber import gauss_legendre_grid, half_indicator, volterra_radius
from .resolvent import (default_transverse_grid, default_xi_grid,
                        fiber_difference_norm, interface_context, rate_fit,
                        sup_over_fibers, unitary_equivalence_residual)
from .spectral import build_zero_mode, solve_a_eps, xi_eps

__all__ = ["main", "run", "parse_complex", "format_complex", "format_float"]


def format_float(x: float) -> str:
    return f"{x:.17g}"


def format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "")
    if t.endswith("i"):
        t = t[:-1] + "j"
    try:
        return complex(t)
    except ValueError as exc:
        raise PreconditionError(f"cannot parse complex number {text!r}") from exc


def _parse_float_list(text: str):
    return [float(p) for p in text.split(",") if p != ""]


def _scan_finite(obj) -> None:
    if isinstance(obj, dict):
        for v in obj.values():
            _scan_finite(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _scan_finite(v)
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise NumericalError("non-finite value in report")
    elif isinstance(obj, complex):
        if not (math.isfinite(obj.real) and math.isfinite(obj.imag)):
            raise NumericalError("non-finite value in report")


def _emit(text: str, out_path: str) -> None:
    if out_path in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _json_report(payload: dict, out_path: str) -> None:
    _scan_finite(payload)
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", out_path)


def _scalar_report(payload: dict, args) -> None:
    """Key/value report honoring --format for the scalar commands."""
    if getattr(args, "format", "json") == "csv":
        rows = [("key", "value")]
        for key in sorted(payload):
            val = payload[key]
            rows.append((key, val if isinstance(val, str) else
                         ("true" if val is True else
                          "false" if val is False else val)))
        _csv_report(rows, args.out)
    else:
        _json_report(payload, args.out)


def _csv_report(rows, out_path: str) -> None:
    for row in rows:
        _scan_finite(list(row))
    lines = []
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, complex):
                cells.append(format_complex(v))
            else:
                cells.append(format_float(float(v)))
        lines.append(",".join(cells))
    _emit("\n".join(lines) + "\n", out_path)


# -- commands ----------------------------------------------------------------

def _cmd_rescale(args) -> None:
    c = Coupling(args.eta, args.tau)
    cls = classify(c)
    if args.magnetic:
        t = rescale_magnetic(c)
    else:
        t = rescale_squeezed(c)
    _scalar_report({
        "eta_t": t.eta, "tau_t": t.tau, "class": cls.variant,
        "d": c.d, "d_t": t.d,
    }, args)


def _cmd_classify(args) -> None:
    c = Coupling(args.eta, args.tau)
    cls = classify(c)
    payload = {"class": cls.variant, "d": cls.d}
    if cls.d_tilde is not None:
        payload["d_tilde"] = cls.d_tilde
    _scalar_report(payload, args)


def _cmd_volterra(args) -> None:
    grid = gauss_legendre_grid(args.n)
    rep = dirac_rep(args.theta)
    w = np.zeros(args.theta - 1)
    w[0] = 1.0
    q = half_indicator(grid)
    radius = volterra_radius(args.rho, w, q, grid, rep)
    _scalar_report({
        "rho": args.rho, "theta": args.theta, "n": args.n,
        "radius": radius, "bound": 2.0 / math.pi,
        "within_bound": bool(radius <= 2.0 / math.pi + 5e-3),
    }, args)


def _cmd_fiber_norm(args) -> None:
    c = Coupling(args.eta, args.tau)
    grid = gauss_legendre_grid(args.n_slab)
    q = half_indicator(grid)
    z = parse_complex(args.z)
    rows = [("xi", "eps", "norm")]
    for xi in _parse_float_list(args.xi):
        for eps in _parse_float_list(args.eps):
            ctx = interface_context(xi, m=args.m, z=z)
            xgrid = default_transverse_grid(ctx, n_x=args.n_x)
            nrm = fiber_difference_norm(ctx, c, q, eps, args.magnetic,
                                        grid, xgrid)
            rows.append((xi, eps, nrm))
    if args.format == "json":
        _json_report({"rows": [dict(zip(rows[0], r)) for r in rows[1:]]},
                     args.out)
    else:
        _csv_report(rows, args.out)


def _cmd_converge(args) -> None:
    c = Coupling(args.eta, args.tau)
    z = parse_complex(args.z)
    eps_list = _parse_float_list(args.eps)
    if len(eps_list) < 4 or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise PreconditionError("need at least 4 strictly decreasing eps")
    sups = []
    for eps in eps_list:
        xi_grid = default_xi_grid(c, eps, n_points=args.xi_points,
                                  xi_max=args.xi_max)
        res = sup_over_fibers(c, "half", eps, args.magnetic, xi_grid,
                              m=args.m, z=z, n_slab=args.n_slab,
                              n_x=args.n_x)
        sups.append(res.value)
    fit = rate_fit(eps_list, sups)
    rows = [("eps", "sup_norm")]
    rows += list(zip(eps_list, sups))
    rows.append(("slope", fit.slope))
    rows.append(("intercept", fit.intercept))
    if args.format == "json":
        _json_report({
            "points": [{"eps": e, "sup_norm": s}
                       for e, s in zip(eps_list, sups)],
            "slope": fit.slope, "intercept": fit.intercept,
            "max_abs_residual": fit.max_abs_residual,
        }, args.out)
    else:
        _csv_report(rows, args.out)


def _cmd_counterexample(args) -> None:
    c = Coupling(args.eta, args.tau)
    a_eps = solve_a_eps(c.d, c.tau, args.m, args.eps)
    xi = xi_eps(c.d, c.tau, args.m, args.eps, a_eps)
    cert = build_zero_mode(xi, args.eps, c, args.m)
    _json_report({
        "a_eps": a_eps,
        "xi_eps": xi,
        "mu": cert.mu,
        "residual_condition": cert.residual_condition,
        "residual_continuity": cert.residual_continuity,
        "residual_ode": cert.residual_ode,
        "w1": [format_complex(complex(v)) for v in cert.w1],
        "w2": [format_complex(complex(v)) for v in cert.w2],
        "w3": [format_complex(complex(v)) for v in cert.w3],
    }, args.out)


def _cmd_unitary_check(args) -> None:
    target = Coupling(args.eta_t, args.tau_t)
    z = parse_complex(args.z)
    ctx = interface_context(args.xi, m=args.m, z=z)
    grid = gauss_legendre_grid(args.n_slab)
    xgrid = default_transverse_grid(ctx, n_x=args.n_x)
    res = unitary_equivalence_residual(ctx, target, grid, xgrid)
    _scalar_report({
        "d_tilde": target.d, "residual": res,
        "within_1e-8": bool(res <= 1e-8),
    }, args)


def _apply_config_file(parser: argparse.ArgumentParser, argv):
    """Expand `--config file` into key=value defaults; flags override."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        parser.error("--config needs a path")
    prefix = argv[: idx]
    rest = argv[idx + 2:]
    injected = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                parser.error(f"bad config line: {line!r}")
            key, val = line.split("=", 1)
            injected += [f"--{key.strip()}", val.strip()]
    # flags given on the command line win: put injected first
    return prefix[:1] + injected + prefix[1:] + rest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shellwave",
        description="interface-interaction resolvent experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="-")
        p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("rescale")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--magnetic", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_rescale)

    p = sub.add_parser("classify")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("volterra")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--theta", type=int, default=2, choices=(2, 3))
    p.add_argument("--n", type=int, default=400)
    common(p)
    p.set_defaults(func=_cmd_volterra)

    p = sub.add_parser("fiber-norm")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--z", default="0+1i")
    p.add_argument("--xi", required=True, help="comma list")
    p.add_argument("--eps", required=True, help="comma list")
    p.add_argument("--magnetic", action="store_true")
    p.add_argument("--n-slab", type=int, default=200)
    p.add_argument("--n-x", type=int, default=800)
    common(p)
    p.set_defaults(func=_cmd_fiber_norm)

    p = sub.add_parser("converge")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--z", default="0+1i")
    p.add_argument("--eps", required=True, help="comma list, decreasing")
    p.add_argument("--xi-points", type=int, default=60)
    p.add_argument("--xi-max", type=float, default=None)
    p.add_argument("--magnetic", action="store_true")
    p.add_argument("--n-slab", type=int, default=200)
    p.add_argument("--n-x", type=int, default=800)
    common(p)
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("counterexample")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--eps", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_counterexample)

    p = sub.add_parser("unitary-check")
    p.add_argument("--eta-t", type=float, required=True)
    p.add_argument("--tau-t", type=float, required=True)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--z", default="0+1i")
    p.add_argument("--xi", type=float, default=0.7)
    p.add_argument("--n-slab", type=int, default=200)
    p.add_argument("--n-x", type=int, default=600)
    common(p)
    p.set_defaults(func=_cmd_unitary_check)

    return parser


def run(argv) -> int:
    parser = _build_parser()
    argv = list(argv)
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except PreconditionError as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))
