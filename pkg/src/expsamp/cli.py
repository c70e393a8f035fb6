"""Command-line front end.

Subcommands: kernel-info, moments, eval, reconstruct, table, converge,
voronovskaya, bounds.  Exit status is 0 on success, 1 on usage errors
(bad flags, malformed ranges, unknown kernels or functions, unreadable
files) and 2 when a bound's moment precondition fails.

All floating output uses 12 significant digits except the table command,
whose error cells are rounded to 4 decimals for comparison against
published values.  A ``--config <file>`` of key=value lines supplies
defaults for any long flag of the chosen subcommand; flags given on the
command line win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from typing import Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .analysis import (
    ConvergenceStudy,
    MomentPreconditionError,
    combo_bound,
    estimate_order,
    first_order_bound,
    make_table,
    vanishing_moment_bound,
    voronovskaya_check,
)
from .combinations import solve_coefficients
from .functions import get_function
from .kernels import KernelSpecError, parse_kernel_spec
from .moments import build_moment_report
from .operators import (
    MissingSampleError,
    OperatorConfig,
    SampleFormatError,
    SampleSeries,
    apply_from_samples,
    apply_grid,
    read_sample_csv,
    write_grid_csv,
    write_sample_csv,
)

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1, not argparse's 2
        raise UsageError(message)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _parse_x_values(text: str) -> list[float]:
    """Either ``lo:hi:step`` (inclusive range) or a comma list of points."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range {text!r}: want lo:hi:step with 3 fields, got {len(parts)}")
        try:
            lo, hi, step = (float(p) for p in parts)
        except ValueError:
            bad = next(p for p in parts if not _is_float(p))
            raise UsageError(f"range {text!r}: bad number {bad!r} at position {text.index(bad)}") from None
        if not lo < hi:
            raise UsageError(f"range {text!r}: lo must be < hi")
        if step <= 0.0:
            raise UsageError(f"range {text!r}: step must be positive")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        values = [lo + i * step for i in range(count)]
    else:
        values = []
        for tok in text.split(","):
            tok = tok.strip()
            if not _is_float(tok):
                raise UsageError(f"point list {text!r}: bad number {tok!r} at position {text.index(tok)}")
            values.append(float(tok))
    if not values:
        raise UsageError(f"empty evaluation grid from {text!r}")
    if any(v <= 0.0 for v in values):
        raise UsageError(f"evaluation points must be positive, got {min(values)}")
    return values


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_w_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"bad rate list {text!r}: want comma-separated numbers") from None
    if any(b <= a for a, b in zip(values, values[1:])) or any(v <= 0 for v in values):
        raise UsageError(f"rate list {text!r} must be positive and strictly increasing")
    return values


def _load_config_flags(path: str) -> list[str]:
    flags: list[str] = []
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                flags.append(f"--{key}")
        else:
            flags.extend([f"--{key}", value])
    return flags


def _inject_config(argv: list[str]) -> list[str]:
    """Pull out --config and splice its flags right after the subcommand,
    so explicit command-line flags override them."""
    out = []
    config_path = None
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file path")
            config_path = argv[i + 1]
            i += 2
            continue
        if tok.startswith("--config="):
            config_path = tok.split("=", 1)[1]
            i += 1
            continue
        out.append(tok)
        i += 1
    if config_path is None:
        return out
    if not out:
        raise UsageError("--config given but no subcommand")
    return [out[0]] + _load_config_flags(config_path) + out[1:]


def _open_output(args) -> TextIO:
    if args.output:
        return open(args.output, "w", newline="")
    return sys.stdout


def _study_payload(study: ConvergenceStudy) -> dict:
    infinite = study.fitted_order is not None and math.isinf(study.fitted_order)
    return {
        "w_list": list(study.w_list),
        "errors": list(study.errors),
        "fitted_order": None if (study.fitted_order is None or infinite) else study.fitted_order,
        "infinite_order": infinite,
        "fitted_constant": study.fitted_constant,
        "scaled_errors": list(study.scaled_errors) if study.scaled_errors else None,
        "predicted_limit": study.predicted_limit,
        "deviations": list(study.deviations) if study.deviations else None,
    }


def _scheme_payload(scheme) -> dict:
    return {
        "p": scheme.p,
        "coefficients": [str(c) for c in scheme.coeffs],
        "coefficients_decimal": [float(c) for c in scheme.coeffs],
    }


# ---------------------------------------------------------------------------
# subcommand runners


def _run_kernel_info(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    reports = [build_moment_report(kernel, nu) for nu in range(args.nu_max + 1)]
    with _managed(args) as out:
        if args.format == "json":
            payload = {
                "label": kernel.label,
                "log_support": list(kernel.log_support),
                "moments": [asdict(r) for r in reports],
            }
            json.dump(payload, out, indent=2)
            out.write("\n")
        else:
            out.write(f"kernel: {kernel.label}\n")
            a, b = kernel.log_support
            out.write(f"log_support: [{_fmt(a)}, {_fmt(b)}]\n")
            out.write("nu  m_nu(u=1)        M_nu_sup         u_independent\n")
            for r in reports:
                out.write(
                    f"{r.order:<3d} {_fmt(r.algebraic):<16} {_fmt(r.absolute_sup):<16} "
                    f"{str(r.u_independent).lower()}\n"
                )
    return 0


def _run_moments(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    reports = [
        build_moment_report(kernel, nu, at_u=args.u, grid_size=args.grid)
        for nu in range(args.nu_max + 1)
    ]
    with _managed(args) as out:
        if args.format == "csv":
            out.write("nu,m_nu,M_nu_sup,u_independent\n")
            for r in reports:
                out.write(
                    f"{r.order},{_fmt(r.algebraic)},{_fmt(r.absolute_sup)},"
                    f"{str(r.u_independent).lower()}\n"
                )
        elif args.format == "json":
            json.dump([asdict(r) for r in reports], out, indent=2)
            out.write("\n")
        else:
            out.write(f"moments of {kernel.label} at u={_fmt(args.u)}\n")
            for r in reports:
                out.write(
                    f"nu={r.order}: m_nu={_fmt(r.algebraic)}  M_nu_sup={_fmt(r.absolute_sup)}  "
                    f"u_independent={str(r.u_independent).lower()}\n"
                )
    return 0


def _run_eval(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    f = get_function(args.fn)
    xs = _parse_x_values(args.x)
    cfg = OperatorConfig(w=args.w, quad_nodes=args.quad_nodes)
    points = apply_grid(f, kernel, cfg, xs)
    if args.emit_samples:
        series = SampleSeries.covering(f, kernel, args.w, xs, args.quad_nodes)
        write_sample_csv(args.emit_samples, series)
    with _managed(args) as out:
        if args.format == "text":
            out.write(f"(I_w f)(x) with kernel {kernel.label}, f={f.label}, w={_fmt(args.w)}\n")
            for p in points:
                out.write(
                    f"x={_fmt(p.x):<16} approx={_fmt(p.approx):<18} "
                    f"exact={_fmt(p.exact):<18} abs_error={_fmt(p.abs_error)}\n"
                )
        else:
            write_grid_csv(out, points)
    return 0


def _run_reconstruct(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    series = read_sample_csv(args.samples)
    xs = _parse_x_values(args.x)
    values = [apply_from_samples(series, kernel, x) for x in xs]
    with _managed(args) as out:
        out.write("x,approx\n")
        for x, v in zip(xs, values):
            out.write(f"{_fmt(x)},{_fmt(v)}\n")
    return 0


def _run_table(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    f = get_function(args.fn)
    xs = _parse_x_values(args.x)
    scheme = solve_coefficients(args.p)
    table = make_table(f, kernel, scheme, args.w, xs, args.quad_nodes)
    with _managed(args) as out:
        if args.latex or args.format == "latex":
            table.to_latex(out)
        else:
            table.to_csv(out)
    return 0


def _run_converge(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    f = get_function(args.fn)
    w_list = _parse_w_list(args.w_list)
    scheme = solve_coefficients(args.p) if args.p is not None else None
    lo, hi = f.eval_interval
    grid = list(np.linspace(lo, hi, args.grid_points))
    study = estimate_order(f, kernel, scheme, w_list, grid, args.quad_nodes)
    payload = _study_payload(study)
    payload["combination"] = _scheme_payload(scheme) if scheme else None
    with _managed(args) as out:
        json.dump(payload, out, indent=2)
        out.write("\n")
    return 0


def _run_voronovskaya(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    f = get_function(args.fn)
    w_list = _parse_w_list(args.w_list)
    scheme = solve_coefficients(args.p) if args.p is not None else None
    study = voronovskaya_check(f, kernel, args.x, w_list, scheme, args.quad_nodes)
    payload = _study_payload(study)
    payload["combination"] = _scheme_payload(scheme) if scheme else None
    with _managed(args) as out:
        json.dump(payload, out, indent=2)
        out.write("\n")
    return 0


def _run_bounds(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    f = get_function(args.fn)
    if args.check == "first":
        report = first_order_bound(f, kernel, args.w, args.x, quad_nodes=args.quad_nodes)
    elif args.check == "moment":
        report = vanishing_moment_bound(
            f, kernel, args.w, args.x, args.r, quad_nodes=args.quad_nodes
        )
    else:
        scheme = solve_coefficients(args.p if args.p is not None else 1)
        report = combo_bound(f, kernel, scheme, args.w, args.x, quad_nodes=args.quad_nodes)
    payload = asdict(report)
    if args.check == "combo":
        payload["combination"] = _scheme_payload(scheme)
    with _managed(args) as out:
        json.dump(payload, out, indent=2)
        out.write("\n")
    return 0


class _managed:
    """Context manager closing --output files but leaving stdout open."""

    def __init__(self, args):
        self.args = args
        self.fh: Optional[TextIO] = None

    def __enter__(self) -> TextIO:
        self.fh = _open_output(self.args)
        return self.fh

    def __exit__(self, *exc) -> None:
        if self.fh is not sys.stdout and self.fh is not None:
            self.fh.close()


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="expsamp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"expsamp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, kernel: bool = True) -> None:
        if kernel:
            p.add_argument("--kernel", required=True,
                           help="kernel spec: bspline:<n> or combo:<n>:<alpha>:<beta>")
        p.add_argument("--output", default=None, help="write to file instead of stdout")
        p.add_argument("--quad-nodes", type=int, default=7,
                       help="Gauss-Legendre nodes per cell (default 7)")

    p = sub.add_parser("kernel-info", help="kernel summary with moment constants")
    common(p)
    p.add_argument("--nu-max", type=int, default=3)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(run=_run_kernel_info)

    p = sub.add_parser("moments", help="moment table for a kernel")
    common(p)
    p.add_argument("--nu-max", type=int, default=4)
    p.add_argument("--u", type=float, default=1.0, help="pointwise moment location")
    p.add_argument("--grid", type=int, default=4096, help="grid size for the sup estimate")
    p.add_argument("--format", choices=("csv", "text", "json"), default="csv")
    p.set_defaults(run=_run_moments)

    p = sub.add_parser("eval", help="evaluate the operator for a built-in function")
    common(p)
    p.add_argument("--fn", required=True, help="built-in function name (or const:<c>)")
    p.add_argument("--w", type=float, required=True, help="sampling rate")
    p.add_argument("--x", required=True, help="points: lo:hi:step or comma list")
    p.add_argument("--emit-samples", default=None, metavar="PATH",
                   help="also write the cell means used to a sample CSV")
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.set_defaults(run=_run_eval)

    p = sub.add_parser("reconstruct", help="evaluate the operator from a sample CSV")
    common(p)
    p.add_argument("--samples", required=True, help="sample CSV ('# w=<v>' sidecar, k,mean rows)")
    p.add_argument("--x", required=True, help="points: lo:hi:step or comma list")
    p.set_defaults(run=_run_reconstruct)

    p = sub.add_parser("table", help="error table for I_{iw} and the combination")
    common(p)
    p.add_argument("--fn", required=True)
    p.add_argument("--w", type=float, required=True)
    p.add_argument("--p", type=int, required=True, help="combination size")
    p.add_argument("--x", required=True)
    p.add_argument("--latex", action="store_true", help="emit a LaTeX tabular block")
    p.add_argument("--format", choices=("csv", "latex"), default="csv")
    p.set_defaults(run=_run_table)

    p = sub.add_parser("converge", help="fit the convergence order over a rate list")
    common(p)
    p.add_argument("--fn", required=True)
    p.add_argument("--w-list", required=True, help="comma list, strictly increasing")
    p.add_argument("--p", type=int, default=None, help="combination size (omit for single)")
    p.add_argument("--grid-points", type=int, default=201)
    p.set_defaults(run=_run_converge)

    p = sub.add_parser("voronovskaya", help="scaled pointwise errors vs the predicted limit")
    common(p)
    p.add_argument("--fn", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--w-list", required=True)
    p.add_argument("--p", type=int, default=None)
    p.set_defaults(run=_run_voronovskaya)

    p = sub.add_parser("bounds", help="evaluate both sides of an error estimate")
    common(p)
    p.add_argument("--fn", required=True)
    p.add_argument("--w", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--check", choices=("first", "moment", "combo"), default="first")
    p.add_argument("--r", type=int, default=2, help="order for --check moment")
    p.add_argument("--p", type=int, default=None, help="combination size for --check combo")
    p.set_defaults(run=_run_bounds)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(_inject_config(argv))
        return args.run(args)
    except UsageError as exc:
        print(f"expsamp: error: {exc}", file=sys.stderr)
        return 1
    except MomentPreconditionError as exc:
        print(f"expsamp: precondition failed: {exc}", file=sys.stderr)
        return 2
    except (KernelSpecError, SampleFormatError, MissingSampleError) as exc:
        print(f"expsamp: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"expsamp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
