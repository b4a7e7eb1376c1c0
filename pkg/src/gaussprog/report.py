"""Result structures and their plain-text rendering.

Commands first build a JSON-ready result dict; every text report is rendered
from that dict alone, so each printed number can be traced to the result file.
"""

from __future__ import annotations

import json

import numpy as np

from . import value_core as vc
from .approx_bridge import GplpProblem, gplp_value, solve_gplp
from .gp_solver import (
    GpProblem,
    KktTolerances,
    SolverOptions,
    balance_report,
    build_dual,
    kkt_check,
    solve_dual,
    solve_primal,
)
from .lp_solver import LpProblem, solve_lp
from .modelio import FORMAT_VERSION, ModelFile


def _list(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def _header(mf: ModelFile, command: str) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "command": command,
        "kind": mf.kind,
        "model": mf.name,
        "value_unit": mf.value_unit,
        "variables": [{"name": n, "unit": u} for n, u in mf.variables],
        "resources": [{"name": n, "unit": u} for n, u in mf.resources],
    }


def _targets(p: GpProblem) -> dict:
    n = p.dimension
    m = [0.0] * n
    sigma = [0.0] * n
    groups = []
    for c in p.model.independents:
        m[c.variable_index] = float(c.m)
        sigma[c.variable_index] = float(c.sigma)
        groups.append((c.variable_index, {"variables": [c.variable_index], "lambda": float(c.lam)}))
    for s in p.model.sets:
        for j, mu, sd in zip(s.variable_indices, s.mean, s.sigmas):
            m[j] = float(mu)
            sigma[j] = float(sd)
        groups.append((min(s.variable_indices), {"variables": list(s.variable_indices), "lambda": float(s.lam)}))
    return {"m": m, "sigma": sigma, "components": [g for _, g in sorted(groups, key=lambda e: e[0])]}


def _dual_section(p: GpProblem, x) -> dict:
    lp = build_dual(p, x)
    sol = solve_dual(p, x)
    out = {"status": sol.status, "constraint_rhs": _list(lp.rhs)}
    if sol.optimal:
        out["prices"] = _list(sol.point)
        out["objective"] = float(sol.objective_value)
    return out


def _kkt_section(p: GpProblem, x, y, tol: KktTolerances) -> dict:
    k = kkt_check(p, x, y, tol)
    return {
        "gradient_prices": _list(k.gradient_prices),
        "dual_cost": _list(k.dual_cost),
        "stationarity_residual": _list(k.stationarity_residual),
        "primal_feasibility": _list(k.primal_feasibility),
        "complementarity_x": float(k.complementarity_x),
        "complementarity_y": float(k.complementarity_y),
        "passed": dict(k.passed),
        "all_passed": k.all_passed,
        "tolerances": {
            "stationarity": tol.stationarity,
            "feasibility": tol.feasibility,
            "complementarity": tol.complementarity,
        },
    }


def _balance_section(p: GpProblem, x, y) -> dict:
    b = balance_report(p, x, y)
    return {k: float(v) for k, v in vars(b).items()}


def solve_result(mf: ModelFile, opts: SolverOptions, tol: KktTolerances = KktTolerances()) -> dict:
    p = mf.problem
    res = _header(mf, "solve")
    res["options"] = opts.to_dict()
    if isinstance(p, GpProblem):
        sol = solve_primal(p, opts)
        x = sol.plan
        res["targets"] = _targets(p)
        res["primal"] = {
            "plan": _list(x),
            "value": float(sol.value),
            "gradient_prices": _list(sol.gradient_prices),
            "gradient_cost": float(vc.gradient_cost(x, p.model)),
            "slack": _list(sol.slack),
            "starts_used": sol.starts_used,
            "iterations": sol.iterations,
            "stationarity_gap": float(sol.stationarity_gap),
            "converged": bool(sol.converged),
        }
        dual = _dual_section(p, x)
        res["dual"] = dual
        if dual["status"] == "optimal":
            res["kkt"] = _kkt_section(p, x, dual["prices"], tol)
            res["balance"] = _balance_section(p, x, dual["prices"])
    elif isinstance(p, GplpProblem):
        sol = solve_gplp(p, opts)
        res["primal"] = {
            "status": sol.status,
            "plan": _list(sol.plan),
            "value": float(sol.value),
            "gradient_prices": _list(sol.gradient_prices),
            "slack": _list(sol.slack),
            "regions_feasible": sol.starts_used,
        }
        res["ramps"] = [{"a": u.a, "b": u.b, "mass": u.mass} for u in p.components]
    elif isinstance(p, LpProblem):
        sol = solve_lp(p)
        res["lp"] = {"status": sol.status, "sense": p.sense}
        if sol.optimal:
            res["lp"].update(
                plan=_list(sol.point),
                objective=float(sol.objective_value),
                duals=_list(sol.duals),
                slack=_list(p.rhs - p.constraint_matrix @ sol.point),
                pivots=sol.pivots,
            )
    return res


def dual_result(mf: ModelFile, x) -> dict:
    p = mf.problem
    res = _header(mf, "dual")
    res["plan"] = _list(x)
    res["value"] = float(vc.total_value(x, p.model))
    res["dual"] = _dual_section(p, x)
    return res


def check_result(mf: ModelFile, x, y, tol: KktTolerances = KktTolerances()) -> dict:
    p = mf.problem
    res = _header(mf, "check")
    res["plan"] = _list(x)
    res["prices"] = _list(y)
    res["targets"] = _targets(p)
    res["kkt"] = _kkt_section(p, x, y, tol)
    res["balance"] = _balance_section(p, x, y)
    return res


def to_json(result: dict) -> str:
    return json.dumps(result, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# text rendering


def _fmt(v: float, spec: str) -> str:
    text = format(v, spec)
    # -0.00 after rounding reads as a sign error
    return text[1:] if text.startswith("-") and not text.strip("-0.,") else text


def _money(v: float) -> str:
    return _fmt(v, ",.2f")


def _qty(v: float) -> str:
    return _fmt(v, ",.3f")


def _table(headers: list[str], rows: list[list[str]]) -> list[str]:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    line = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    out = [line, "  ".join("-" * w for w in widths)]
    for r in rows:
        out.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return out


def _mark(ok: bool) -> str:
    return "ok" if ok else "FAILED"


def _render_kkt(res: dict, lines: list[str]):
    k = res["kkt"]
    names = [v["name"] for v in res["variables"]]
    rnames = [r["name"] for r in res["resources"]]
    lines.append("Kuhn-Tucker conditions")
    lines += _table(
        ["product", "g(x)", "yA", "g(x) - yA"],
        [[n, _money(g), _money(c), _money(s)]
         for n, g, c, s in zip(names, k["gradient_prices"], k["dual_cost"], k["stationarity_residual"])],
    )
    lines.append(f"  stationarity  g(x) - yA <= 0        {_mark(k['passed']['stationarity'])}")
    lines += _table(["resource", "r - Ax"], [[n, _qty(v)] for n, v in zip(rnames, k["primal_feasibility"])])
    lines.append(f"  feasibility   r - Ax >= 0           {_mark(k['passed']['primal_feasibility'])}")
    lines.append(f"  (g(x) - yA) . x = {k['complementarity_x']:.6g}   {_mark(k['passed']['complementarity_x'])}")
    lines.append(f"  y . (r - Ax)    = {k['complementarity_y']:.6g}   {_mark(k['passed']['complementarity_y'])}")
    lines.append(f"  x >= 0, y >= 0                     {_mark(k['passed']['nonnegativity'])}")
    lines.append(f"  all conditions: {'satisfied' if k['all_passed'] else 'NOT satisfied'}")
    lines.append("")


def _render_balance(res: dict, lines: list[str]):
    b = res["balance"]
    lines.append("Balance identities")
    lines.append(f"  gradient cost of plan      g(x) . x     = {_money(b['gradient_cost_of_plan'])}")
    lines.append(f"  internal cost of consumed  y . (A x)    = {_money(b['internal_cost_of_consumed'])}"
                 f"   rel. gap {b['gap_consumed']:.2e}")
    lines.append(f"  internal cost of stock     y . r        = {_money(b['internal_cost_of_stock'])}"
                 f"   rel. gap {b['gap_stock']:.2e}")
    lines.append(f"  g(x) . x vs y . r                        rel. gap {b['gap_total']:.2e}")
    lines.append(f"  full value of plan         F(x)         = {_money(b['full_value'])}"
                 f"   differs from y . r by {b['gap_full_value']:.1%}")
    lines.append("")


def _render_targets(res: dict, plan: list[float], lines: list[str]):
    t = res["targets"]
    names = [v["name"] for v in res["variables"]]
    rows = []
    for j, n in enumerate(names):
        rows.append([n, _qty(t["m"][j]), _qty(plan[j]), _qty(plan[j] - t["m"][j]), _qty(t["sigma"][j])])
    lines.append("Plan against targets")
    lines += _table(["product", "m", "x*", "x* - m", "sigma"], rows)
    for comp in t["components"]:
        members = ", ".join(names[j] for j in comp["variables"])
        lines.append(f"  exact value of ({members}): {_money(comp['lambda'])}")
    lines.append("")


def render(res: dict) -> str:
    cmd = res["command"]
    unit = res.get("value_unit") or ""
    lines = []
    title = res.get("model") or "(unnamed model)"
    lines.append(f"{cmd}: {title} [{res['kind']}]")
    if "options" in res:
        o = res["options"]
        lines.append(f"options: starts={o['starts']} seed={o['seed']} gap_tol={o['gap_tol']:g} max_iter={o['max_iter']}")
    lines.append("")
    names = [v["name"] for v in res["variables"]]
    rnames = [r["name"] for r in res["resources"]]

    if cmd == "solve" and res["kind"] == "gaussian":
        pr = res["primal"]
        lines.append("Optimal plan x*")
        lines += _table(["product", "x*", "g(x*)"],
                        [[n, _qty(x), _money(g)] for n, x, g in zip(names, pr["plan"], pr["gradient_prices"])])
        lines.append(f"  F(x*) = {_money(pr['value'])} {unit}")
        lines.append(f"  starts={pr['starts_used']} iterations={pr['iterations']} "
                     f"FW gap={pr['stationarity_gap']:.3e} converged={pr['converged']}")
        lines.append("")
        _render_dual(res["dual"], rnames, unit, lines)
        _render_targets(res, pr["plan"], lines)
        lines.append("Resource slack r - A x*")
        lines += _table(["resource", "slack"], [[n, _qty(v)] for n, v in zip(rnames, pr["slack"])])
        lines.append("")
        if "kkt" in res:
            _render_kkt(res, lines)
            _render_balance(res, lines)
    elif cmd == "solve" and res["kind"] == "gplp":
        pr = res["primal"]
        if pr["status"] != "optimal":
            lines.append(f"status: {pr['status']}")
        else:
            lines.append("Optimal plan x*")
            lines += _table(["product", "a", "b", "x*", "slope"],
                            [[n, _qty(r_["a"]), _qty(r_["b"]), _qty(x), _money(g)]
                             for n, r_, x, g in zip(names, res["ramps"], pr["plan"], pr["gradient_prices"])])
            lines.append(f"  U(x*) = {_money(pr['value'])} {unit}")
            lines.append(f"  feasible regions: {pr['regions_feasible']}")
            lines.append("")
            lines.append("Resource slack r - A x*")
            lines += _table(["resource", "slack"], [[n, _qty(v)] for n, v in zip(rnames, pr["slack"])])
            lines.append("")
    elif cmd == "solve" and res["kind"] == "lp":
        lp = res["lp"]
        lines.append(f"status: {lp['status']}")
        if lp["status"] == "optimal":
            lines += _table(["variable", "x*"], [[n, _qty(x)] for n, x in zip(names, lp["plan"])])
            lines.append(f"  objective = {_money(lp['objective'])} {unit}")
            lines += _table(["resource", "dual", "slack"],
                            [[n, _money(y), _qty(s)] for n, y, s in zip(rnames, lp["duals"], lp["slack"])])
        lines.append("")
    elif cmd == "dual":
        lines.append("Plan x")
        lines += _table(["product", "x"], [[n, _qty(x)] for n, x in zip(names, res["plan"])])
        lines.append(f"  F(x) = {_money(res['value'])} {unit}")
        lines.append("")
        _render_dual(res["dual"], rnames, unit, lines)
    elif cmd == "check":
        _render_targets(res, res["plan"], lines)
        _render_kkt(res, lines)
        _render_balance(res, lines)
    return "\n".join(lines).rstrip() + "\n"


def _render_dual(d: dict, rnames: list[str], unit: str, lines: list[str]):
    lines.append("Dual problem: min y . r  s.t.  y A >= g(x), y >= 0")
    lines.append("  g(x) = (" + ", ".join(_money(v) for v in d["constraint_rhs"]) + ")")
    lines.append(f"  status: {d['status']}")
    if d["status"] == "optimal":
        lines += _table(["resource", "y*"], [[n, _money(v)] for n, v in zip(rnames, d["prices"])])
        lines.append(f"  y* . r = {_money(d['objective'])} {unit}")
    lines.append("")
