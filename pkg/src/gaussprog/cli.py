"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 domain or infeasibility error,
3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import value_core as vc
from .approx_bridge import (
    BOX_MIN,
    BOX_PAPER_MAX,
    GplpProblem,
    UniformComponent,
    gaussian_to_gplp,
    gplp_to_gaussian,
    lp_to_gaussian,
    uniform_from_gaussian,
)
from .gp_solver import GpProblem, GpSolverError, KktTolerances, SolverOptions, solve_primal
from .lp_solver import LpError, LpProblem
from .modelio import ModelFileError, dump_model, read_model_file
from . import report

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.replace(";", ",").split(",") if v.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _options(args) -> SolverOptions:
    return SolverOptions(starts=args.starts, seed=args.seed, gap_tol=args.gap_tol, max_iter=args.max_iter)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _print_result(res: dict, fmt: str):
    sys.stdout.write(report.to_json(res) if fmt == "json" else report.render(res))


def _gaussian(mf, verb: str) -> GpProblem:
    if not isinstance(mf.problem, GpProblem):
        raise vc.DomainError(f"'{verb}' needs a gaussian model, got kind {mf.kind!r}")
    return mf.problem


def _sized(vec, n: int, what: str):
    if len(vec) != n:
        raise vc.DomainError(f"{what} has {len(vec)} entries, expected {n}")
    return vec


# --------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    mf = read_model_file(args.model)
    res = report.solve_result(mf, _options(args))
    if args.out:
        Path(args.out).write_text(report.to_json(res), encoding="utf-8")
    _print_result(res, args.format)
    primal = res.get("primal") or res.get("lp")
    if primal and primal.get("status", "optimal") != "optimal":
        return EXIT_DOMAIN
    return EXIT_OK


def _plan_from(args, p: GpProblem) -> np.ndarray:
    if args.plan is not None:
        return _sized(args.plan, p.dimension, "--plan")
    if getattr(args, "result", None):
        res = json.loads(Path(args.result).read_text(encoding="utf-8"))
        return _sized(np.array(res["primal"]["plan"]), p.dimension, "result plan")
    return solve_primal(p, _options(args)).plan


def cmd_dual(args) -> int:
    mf = read_model_file(args.model)
    p = _gaussian(mf, "dual")
    x = _plan_from(args, p)
    res = report.dual_result(mf, x)
    _print_result(res, args.format)
    return EXIT_OK if res["dual"]["status"] == "optimal" else EXIT_DOMAIN


def cmd_check(args) -> int:
    mf = read_model_file(args.model)
    p = _gaussian(mf, "check")
    if args.result:
        res = json.loads(Path(args.result).read_text(encoding="utf-8"))
        x = np.array(res["primal"]["plan"]) if args.plan is None else args.plan
        y = np.array(res["dual"]["prices"]) if args.prices is None else args.prices
    else:
        if args.plan is None or args.prices is None:
            raise UsageError("check needs --plan and --prices (or --result)")
        x, y = args.plan, args.prices
    x = _sized(x, p.dimension, "plan")
    y = _sized(y, len(p.resources), "prices")
    tol = KktTolerances(stationarity=args.stat_tol, complementarity=args.comp_tol)
    res = report.check_result(mf, x, y, tol)
    _print_result(res, args.format)
    return EXIT_OK if res["kkt"]["all_passed"] else EXIT_DOMAIN


def convert(mf, target: str, box_rule: str = BOX_MIN):
    """Converted :class:`ModelFile`; the direction follows from ``mf.kind`` and ``target``."""
    direction = (mf.kind, target)
    if direction == ("lp", "gaussian"):
        return mf.with_problem("gaussian", lp_to_gaussian(mf.problem, box_rule))
    if direction == ("gaussian", "gplp"):
        return mf.with_problem("gplp", gaussian_to_gplp(mf.problem))
    if direction == ("gplp", "gaussian"):
        return mf.with_problem("gaussian", gplp_to_gaussian(mf.problem))
    raise vc.DomainError(f"unsupported conversion {mf.kind} -> {target}")


def cmd_convert(args) -> int:
    mf = read_model_file(args.model)
    _emit(dump_model(convert(mf, args.to, args.box_rule)), args.out)
    return EXIT_OK


def curve_table(kind: str, xmin: float, xmax: float, samples: int, *, m=None, sigma=None, lam=0.5,
                a=None, b=None, mass=None) -> tuple[list[str], np.ndarray]:
    """Columns for a value / price / ramp / compare curve over ``[xmin, xmax]``."""
    if samples < 2:
        raise vc.DomainError("samples must be >= 2")
    if not xmin < xmax:
        raise vc.DomainError("x_min must be < x_max")
    if xmin < 0:
        raise vc.DomainError("quantities are non-negative; x_min must be >= 0")
    xs = np.linspace(xmin, xmax, samples)
    gauss = None
    if m is not None or sigma is not None:
        if m is None or sigma is None:
            raise vc.DomainError("both --m and --sigma are needed")
        gauss = vc.GaussianComponent(0, m, sigma, lam)
    if kind in ("value", "price", "compare") and gauss is None:
        raise vc.DomainError(f"curve '{kind}' needs --m and --sigma")
    if kind in ("ramp", "compare"):
        if a is not None and b is not None:
            ramp = UniformComponent(0, a, b, 2.0 * lam if mass is None else mass)
        elif gauss is not None:
            ramp = uniform_from_gaussian(gauss)
        else:
            raise vc.DomainError(f"curve '{kind}' needs --a/--b or --m/--sigma")
    if kind == "value":
        return ["x", "value"], np.column_stack([xs, vc.component_value(xs, gauss)])
    if kind == "price":
        return ["x", "price"], np.column_stack([xs, vc.component_price(xs, gauss)])
    if kind == "ramp":
        return ["x", "ramp"], np.column_stack([xs, ramp.value(xs)])
    if kind == "compare":
        return ["x", "gaussian", "uniform"], np.column_stack([xs, vc.component_value(xs, gauss), ramp.value(xs)])
    raise vc.DomainError(f"unknown curve kind {kind!r}")


def cmd_curve(args) -> int:
    header, table = curve_table(args.kind, args.xmin, args.xmax, args.samples, m=args.m, sigma=args.sigma,
                                lam=args.lam, a=args.a, b=args.b, mass=args.mass)
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t" if args.delimiter == "tab" else args.delimiter, lineterminator="\n")
    w.writerow(header)
    for row in table:
        w.writerow([repr(float(v)) for v in row])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    mf = read_model_file(args.model)
    p = mf.problem
    if args.format == "json":
        sys.stdout.write(dump_model(mf))
        return EXIT_OK
    n = len(mf.variables)
    m = len(mf.resources)
    print(f"{args.model}: valid {mf.kind} model, {n} variables, {m} constraints")
    if isinstance(p, GpProblem):
        print(f"  independent products: {len(p.model.independents)}, complete sets: {len(p.model.sets)}")
        print(f"  total exact value: {p.model.total_exact_value:,.2f} {mf.value_unit}".rstrip())
    elif isinstance(p, GplpProblem):
        print(f"  total ramp mass: {p.total_mass:,.2f} {mf.value_unit}".rstrip())
    elif isinstance(p, LpProblem):
        print(f"  objective sense: {p.sense}")
    return EXIT_OK


# --------------------------------------------------------------------------


def _solver_flags(sp):
    sp.add_argument("--starts", type=int, default=32, help="number of Frank-Wolfe starts (default 32)")
    sp.add_argument("--seed", type=int, default=0, help="seed for random starts (default 0)")
    sp.add_argument("--gap-tol", type=float, default=1e-6, help="relative Frank-Wolfe gap tolerance")
    sp.add_argument("--max-iter", type=int, default=5000, help="iteration cap per start")


def _format_flag(sp):
    sp.add_argument("--format", choices=("text", "json"), default="text", help="report format")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gaussprog", description="Gaussian programming planning toolkit")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="solve a gaussian, gplp or lp model")
    sp.add_argument("model")
    _solver_flags(sp)
    _format_flag(sp)
    sp.add_argument("-o", "--out", help="write the structured result file here")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("dual", help="internal resource prices at a plan")
    sp.add_argument("model")
    sp.add_argument("--plan", type=_vector, help="comma-separated plan; solved for if omitted")
    sp.add_argument("--result", help="take the plan from a result file")
    _solver_flags(sp)
    _format_flag(sp)
    sp.set_defaults(func=cmd_dual)

    sp = sub.add_parser("check", help="Kuhn-Tucker conditions and balance identities at (plan, prices)")
    sp.add_argument("model")
    sp.add_argument("--plan", type=_vector)
    sp.add_argument("--prices", type=_vector)
    sp.add_argument("--result", help="take plan and prices from a result file")
    sp.add_argument("--stat-tol", type=float, default=KktTolerances.stationarity)
    sp.add_argument("--comp-tol", type=float, default=KktTolerances.complementarity)
    _format_flag(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("convert", help="lp->gaussian, gaussian->gplp or gplp->gaussian")
    sp.add_argument("model")
    sp.add_argument("--to", required=True, choices=("gaussian", "gplp"))
    sp.add_argument("--box-rule", choices=(BOX_MIN, BOX_PAPER_MAX), default=BOX_MIN,
                    help="enclosing box for lp->gaussian (default: tightest single-row bound)")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_convert)

    sp = sub.add_parser("curve", help="tabulate value, price, ramp or comparison curves")
    sp.add_argument("kind", choices=("value", "price", "ramp", "compare"))
    sp.add_argument("--m", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--lam", type=float, default=0.5, help="exact-fulfillment value (default 0.5: unit mass)")
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--mass", type=float)
    sp.add_argument("--xmin", type=float, default=0.0)
    sp.add_argument("--xmax", type=float, required=True)
    sp.add_argument("--samples", type=int, default=201)
    sp.add_argument("--delimiter", default="tab", help="column delimiter, 'tab' or a character")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("validate", help="load a model file and report its contents")
    sp.add_argument("model")
    _format_flag(sp)
    sp.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gaussprog: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelFileError, vc.DomainError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"gaussprog: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (LpError, GpSolverError, FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"gaussprog: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
