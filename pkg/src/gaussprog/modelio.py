"""Model files: JSON documents describing a gaussian, lp or gplp planning model.

Schema (``format_version`` "1.0")::

    {
      "format_version": "1.0",
      "kind": "gaussian" | "lp" | "gplp",
      "name": "...",                       # optional
      "value_unit": "...",                 # optional, free-form label
      "variables": [{"name": "x1", "unit": "kg"}, ...],
      "constraints": [{"resource": "r1", "unit": "kg",
                       "coefficients": [...], "rhs": 49500,
                       "sense": "<="}],    # sense only for kind "lp"
      # kind "gaussian":
      "components": [{"type": "independent", "variable": "x1",
                      "m": 30, "sigma": 10, "lambda": 5000},
                     {"type": "set", "variables": ["x3", "x4"],
                      "mean": [900, 100], "sigma": [300, 30],   # or "covariance"
                      "lambda": 200000}],
      # kind "lp":
      "objective": {"sense": "maximize", "coefficients": [...]},
      # kind "gplp":
      "ramps": [{"variable": "x1", "a": 12.68, "b": 47.32, "mass": 10000}]
    }

Variables are referenced by name (or by zero-based index).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources as _res
from pathlib import Path

import numpy as np

from . import value_core as vc
from .approx_bridge import GplpProblem, UniformComponent
from .gp_solver import GpProblem
from .lp_solver import LpProblem, LpError

FORMAT_VERSION = "1.0"
KINDS = ("gaussian", "lp", "gplp")
BUILTIN = ("example_sec4", "independent_pair", "lp_small")


class ModelFileError(ValueError):
    def __init__(self, message: str, source: str = "<model>", where: str | None = None):
        self.source = source
        self.where = where
        loc = f"{source}: {where}" if where else source
        super().__init__(f"{loc}: {message}")


@dataclass(frozen=True, eq=False)
class ModelFile:
    kind: str
    problem: object
    variables: tuple  # ((name, unit), ...)
    resources: tuple  # ((name, unit), ...)
    name: str = ""
    value_unit: str = ""
    format_version: str = FORMAT_VERSION

    @property
    def variable_names(self) -> list[str]:
        return [v[0] for v in self.variables]

    @property
    def resource_names(self) -> list[str]:
        return [r[0] for r in self.resources]

    def with_problem(self, kind: str, problem) -> "ModelFile":
        return replace(self, kind=kind, problem=problem)


# --------------------------------------------------------------------------
# parsing helpers


class _Ctx:
    def __init__(self, source: str):
        self.source = source

    def fail(self, where: str, message: str):
        raise ModelFileError(message, self.source, where)

    def get(self, obj: dict, key: str, where: str, default=...):
        if not isinstance(obj, dict):
            self.fail(where, "expected an object")
        if key not in obj:
            if default is ...:
                self.fail(f"{where}.{key}" if where else key, "missing required field")
            return default
        return obj[key]

    def number(self, v, where: str) -> float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(where, f"expected a number, got {type(v).__name__}")
        v = float(v)
        if not math.isfinite(v):
            self.fail(where, "number must be finite")
        return v

    def numbers(self, v, where: str, length: int | None = None) -> list[float]:
        if not isinstance(v, list):
            self.fail(where, "expected a list of numbers")
        if length is not None and len(v) != length:
            self.fail(where, f"expected {length} entries, got {len(v)}")
        return [self.number(x, f"{where}[{i}]") for i, x in enumerate(v)]

    def string(self, v, where: str) -> str:
        if not isinstance(v, str):
            self.fail(where, "expected a string")
        return v


def _field(key: str, base: str) -> str:
    return f"{base}.{key}" if base else key


def parse_model(text: str, source: str = "<model>") -> ModelFile:
    ctx = _Ctx(source)
    if not text.strip():
        raise ModelFileError("empty model file", source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}", source) from None
    if not isinstance(doc, dict):
        ctx.fail("", "top level must be an object")

    version = ctx.string(ctx.get(doc, "format_version", ""), "format_version")
    if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        ctx.fail("format_version", f"unsupported version {version!r} (expected {FORMAT_VERSION})")
    kind = ctx.string(ctx.get(doc, "kind", ""), "kind")
    if kind not in KINDS:
        ctx.fail("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")

    raw_vars = ctx.get(doc, "variables", "")
    if not isinstance(raw_vars, list) or not raw_vars:
        ctx.fail("variables", "expected a non-empty list")
    variables = []
    for i, v in enumerate(raw_vars):
        where = f"variables[{i}]"
        if isinstance(v, str):
            variables.append((v, ""))
        else:
            variables.append((ctx.string(ctx.get(v, "name", where), f"{where}.name"),
                              ctx.string(ctx.get(v, "unit", where, ""), f"{where}.unit")))
    names = [v[0] for v in variables]
    if len(set(names)) != len(names):
        ctx.fail("variables", "variable names must be unique")
    n = len(variables)

    def var_index(ref, where):
        if isinstance(ref, str):
            if ref not in names:
                ctx.fail(where, f"unknown variable {ref!r}")
            return names.index(ref)
        if isinstance(ref, int) and not isinstance(ref, bool) and 0 <= ref < n:
            return ref
        ctx.fail(where, f"invalid variable reference {ref!r}")

    raw_cons = ctx.get(doc, "constraints", "")
    if not isinstance(raw_cons, list):
        ctx.fail("constraints", "expected a list")
    rows, rhs, senses, resources = [], [], [], []
    for i, c in enumerate(raw_cons):
        where = f"constraints[{i}]"
        resources.append((ctx.string(ctx.get(c, "resource", where, f"r{i + 1}"), f"{where}.resource"),
                          ctx.string(ctx.get(c, "unit", where, ""), f"{where}.unit")))
        rows.append(ctx.numbers(ctx.get(c, "coefficients", where), f"{where}.coefficients", n))
        rhs.append(ctx.number(ctx.get(c, "rhs", where), f"{where}.rhs"))
        sense = ctx.string(ctx.get(c, "sense", where, "<="), f"{where}.sense")
        if sense not in ("<=", ">=", "="):
            ctx.fail(f"{where}.sense", f"must be '<=', '>=' or '=', got {sense!r}")
        if kind != "lp" and sense != "<=":
            ctx.fail(f"{where}.sense", f"{kind} models only have '<=' resource rows")
        senses.append(sense)
        if kind != "lp" and rhs[-1] < 0:
            ctx.fail(f"{where}.rhs", "resource stock must be >= 0")
        if kind != "lp" and any(a < 0 for a in rows[-1]):
            bad = next(j for j, a in enumerate(rows[-1]) if a < 0)
            ctx.fail(f"{where}.coefficients[{bad}]", "resource consumption must be >= 0")
    A = np.array(rows, dtype=float).reshape(len(rows), n)
    r = np.array(rhs, dtype=float)

    if kind == "gaussian":
        problem = _parse_gaussian(ctx, doc, n, A, r, var_index)
    elif kind == "lp":
        obj = ctx.get(doc, "objective", "")
        sense = ctx.string(ctx.get(obj, "sense", "objective", "maximize"), "objective.sense")
        if sense not in ("maximize", "minimize"):
            ctx.fail("objective.sense", f"must be 'maximize' or 'minimize', got {sense!r}")
        coefs = ctx.numbers(ctx.get(obj, "coefficients", "objective"), "objective.coefficients", n)
        try:
            problem = LpProblem(coefs, A, r, sense, senses)
        except LpError as exc:
            ctx.fail("constraints", str(exc))
    else:
        problem = _parse_gplp(ctx, doc, n, A, r, var_index)

    return ModelFile(
        kind=kind,
        problem=problem,
        variables=tuple(variables),
        resources=tuple(resources),
        name=ctx.string(doc.get("name", ""), "name"),
        value_unit=ctx.string(doc.get("value_unit", ""), "value_unit"),
        format_version=version,
    )


def _parse_gaussian(ctx, doc, n, A, r, var_index) -> GpProblem:
    raw = ctx.get(doc, "components", "")
    if not isinstance(raw, list) or not raw:
        ctx.fail("components", "expected a non-empty list")
    inds, sets = [], []
    for i, c in enumerate(raw):
        where = f"components[{i}]"
        typ = ctx.string(ctx.get(c, "type", where, "independent"), f"{where}.type")
        lam = ctx.number(ctx.get(c, "lambda", where), f"{where}.lambda")
        if lam < 0:
            ctx.fail(f"{where}.lambda", "must be >= 0")
        if typ == "independent":
            j = var_index(ctx.get(c, "variable", where), f"{where}.variable")
            m = ctx.number(ctx.get(c, "m", where), f"{where}.m")
            sigma = ctx.number(ctx.get(c, "sigma", where), f"{where}.sigma")
            if m <= 0:
                ctx.fail(f"{where}.m", f"must be > 0, got {m}")
            if sigma <= 0:
                ctx.fail(f"{where}.sigma", f"must be > 0, got {sigma}")
            inds.append(vc.GaussianComponent(j, m, sigma, lam))
        elif typ == "set":
            refs = ctx.get(c, "variables", where)
            if not isinstance(refs, list) or len(refs) < 2:
                ctx.fail(f"{where}.variables", "a set needs a list of at least two variables")
            idx = [var_index(v, f"{where}.variables[{k}]") for k, v in enumerate(refs)]
            k = len(idx)
            mean = ctx.numbers(ctx.get(c, "mean", where), f"{where}.mean", k)
            for q, mu in enumerate(mean):
                if mu <= 0:
                    ctx.fail(f"{where}.mean[{q}]", f"must be > 0, got {mu}")
            if "covariance" in c:
                cov_raw = c["covariance"]
                if not isinstance(cov_raw, list) or len(cov_raw) != k:
                    ctx.fail(f"{where}.covariance", f"expected a {k}x{k} matrix")
                cov = [ctx.numbers(row, f"{where}.covariance[{q}]", k) for q, row in enumerate(cov_raw)]
            else:
                sig = ctx.numbers(ctx.get(c, "sigma", where), f"{where}.sigma", k)
                for q, s in enumerate(sig):
                    if s <= 0:
                        ctx.fail(f"{where}.sigma[{q}]", f"must be > 0, got {s}")
                cov = np.diag(np.square(sig))
            try:
                sets.append(vc.SetComponent(tuple(idx), mean, cov, lam))
            except vc.DomainError as exc:
                ctx.fail(where, str(exc))
        else:
            ctx.fail(f"{where}.type", f"must be 'independent' or 'set', got {typ!r}")
    try:
        model = vc.ValueModel(n, inds, sets)
        return GpProblem(model, A, r)
    except vc.DomainError as exc:
        ctx.fail("components", str(exc))


def _parse_gplp(ctx, doc, n, A, r, var_index) -> GplpProblem:
    raw = ctx.get(doc, "ramps", "")
    if not isinstance(raw, list):
        ctx.fail("ramps", "expected a list")
    comps = []
    for i, u in enumerate(raw):
        where = f"ramps[{i}]"
        j = var_index(ctx.get(u, "variable", where), f"{where}.variable")
        vals = {k: ctx.number(ctx.get(u, k, where), f"{where}.{k}") for k in ("a", "b", "mass")}
        try:
            comps.append(UniformComponent(j, vals["a"], vals["b"], vals["mass"]))
        except vc.DomainError as exc:
            ctx.fail(where, str(exc))
    try:
        return GplpProblem(comps, A, r)
    except vc.DomainError as exc:
        ctx.fail("ramps", str(exc))


# --------------------------------------------------------------------------
# files


def builtin_path(name: str) -> Path:
    return Path(str(_res.files("gaussprog") / "data" / f"{name}.json"))


def resolve_path(path) -> Path:
    """Filesystem path, or one of the bundled fixtures by bare name."""
    p = Path(path)
    if not p.exists() and str(path) in BUILTIN:
        return builtin_path(str(path))
    return p


def read_model_file(path) -> ModelFile:
    p = resolve_path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError(f"cannot read file: {exc.strerror}", str(path)) from None
    return parse_model(text, str(path))


def load_model(path):
    """Validated problem (:class:`GpProblem`, :class:`LpProblem` or :class:`GplpProblem`)."""
    return read_model_file(path).problem


# --------------------------------------------------------------------------
# serialization


def _num(v: float):
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2**53 else v


def model_to_dict(mf: ModelFile) -> dict:
    names = mf.variable_names
    p = mf.problem
    doc = {"format_version": FORMAT_VERSION, "kind": mf.kind}
    if mf.name:
        doc["name"] = mf.name
    if mf.value_unit:
        doc["value_unit"] = mf.value_unit
    doc["variables"] = [{"name": nm, "unit": unit} for nm, unit in mf.variables]
    if mf.kind == "gaussian":
        comps = []
        entries = [(c.variable_index, c) for c in p.model.independents] + [
            (min(s.variable_indices), s) for s in p.model.sets
        ]
        for _, c in sorted(entries, key=lambda e: e[0]):
            if isinstance(c, vc.GaussianComponent):
                comps.append({"type": "independent", "variable": names[c.variable_index],
                              "m": _num(c.m), "sigma": _num(c.sigma), "lambda": _num(c.lam)})
            else:
                item = {"type": "set", "variables": [names[j] for j in c.variable_indices],
                        "mean": [_num(v) for v in c.mean]}
                if c.is_diagonal:
                    item["sigma"] = [_num(v) for v in c.sigmas]
                else:
                    item["covariance"] = [[_num(v) for v in row] for row in c.covariance]
                item["lambda"] = _num(c.lam)
                comps.append(item)
        doc["components"] = comps
        A, r, senses = p.constraint_matrix, p.resources, None
    elif mf.kind == "lp":
        doc["objective"] = {"sense": p.sense, "coefficients": [_num(v) for v in p.objective]}
        A, r, senses = p.constraint_matrix, p.rhs, p.row_sense
    else:
        doc["ramps"] = [{"variable": names[u.variable_index], "a": _num(u.a), "b": _num(u.b),
                         "mass": _num(u.mass)} for u in p.components]
        A, r, senses = p.constraint_matrix, p.resources, None
    cons = []
    for i, (row, rhs) in enumerate(zip(A, r)):
        name, unit = mf.resources[i] if i < len(mf.resources) else (f"r{i + 1}", "")
        item = {"resource": name, "unit": unit, "coefficients": [_num(v) for v in row], "rhs": _num(rhs)}
        if senses is not None:
            item["sense"] = senses[i]
        cons.append(item)
    doc["constraints"] = cons
    return doc


def dump_model(mf: ModelFile) -> str:
    """Canonical text form: loading it back and dumping again is a fixed point."""
    return json.dumps(model_to_dict(mf), indent=2, ensure_ascii=False) + "\n"


def write_model(mf: ModelFile, path) -> None:
    Path(path).write_text(dump_model(mf), encoding="utf-8")
