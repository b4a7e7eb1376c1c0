"""Gaussian programming: maximize a Gaussian value over ``{A x <= r, x >= 0}``.

The primal is solved by multi-start Frank-Wolfe with away steps, using
:func:`gaussprog.lp_solver.solve_lp` as the linear oracle. Dual prices are
defined relative to a plan ``x``: they solve ``min y r`` subject to
``y A >= gradient(x)``, ``y >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from . import value_core as vc
from .lp_solver import LpProblem, LpSolution, MAXIMIZE, MINIMIZE, solve_lp

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class GpSolverError(RuntimeError):
    """Every start failed; the model is numerically pathological."""


@dataclass(frozen=True, eq=False)
class GpProblem:
    model: vc.ValueModel
    constraint_matrix: np.ndarray
    resources: np.ndarray

    def __post_init__(self):
        A = np.array(self.constraint_matrix, dtype=float)
        r = np.array(self.resources, dtype=float).reshape(-1)
        if A.ndim != 2:
            raise vc.DomainError("constraint matrix must be two-dimensional")
        if A.shape[1] != self.model.dimension:
            raise vc.DomainError(f"constraint matrix has {A.shape[1]} columns, model has {self.model.dimension} variables")
        if A.shape[0] != len(r):
            raise vc.DomainError(f"constraint matrix has {A.shape[0]} rows, resource vector has {len(r)} entries")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(r))):
            raise vc.DomainError("constraint data must be finite")
        if np.any(A < 0):
            raise vc.DomainError("resource consumption coefficients must be >= 0")
        empty = [j for j in range(A.shape[1]) if not np.any(A[:, j] > 0)]
        if empty:
            raise vc.DomainError(f"products {empty} consume no resource; the plan would be unbounded")
        if np.any(r < 0):
            raise vc.DomainError("resource stocks must be >= 0")
        A.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "resources", r)

    @property
    def dimension(self) -> int:
        return self.model.dimension

    def value(self, x):
        return vc.total_value(x, self.model)

    def gradient(self, x):
        return vc.gradient(x, self.model)

    def slack(self, x) -> np.ndarray:
        return self.resources - self.constraint_matrix @ np.asarray(x, dtype=float)

    def box_bounds(self) -> np.ndarray:
        """Per-variable upper bound ``min_i r_i / a_ij`` implied by single rows."""
        return _box(self.constraint_matrix, self.resources)


@dataclass(frozen=True)
class SolverOptions:
    starts: int = 32
    seed: int = 0
    gap_tol: float = 1e-6
    max_iter: int = 5000
    scan_points: int = 64
    line_tol: float = 1e-10
    away_steps: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class FwRun:
    start: np.ndarray
    plan: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool
    values: tuple = ()


@dataclass(frozen=True, eq=False)
class PrimalSolution:
    plan: np.ndarray
    value: float
    gradient_prices: np.ndarray
    slack: np.ndarray
    starts_used: int
    stationarity_gap: float
    status: str = "optimal"
    iterations: int = 0
    converged: bool = True


# --------------------------------------------------------------------------
# line search


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(t, f(t))``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def segment_search(batch_f, f, x: np.ndarray, d: np.ndarray, gmax: float, points: int = 64, tol: float = 1e-10):
    """Best step ``t in [0, gmax]`` for ``f(x + t d)``.

    A uniform scan guards against multi-modality along the segment; golden
    section then refines the bracket around the best scan point. ``t = 0`` is
    always a candidate, so the result never decreases ``f``.
    """
    ts = np.linspace(0.0, gmax, points)
    pts = np.maximum(x[None, :] + ts[:, None] * d[None, :], 0.0)
    vals = np.asarray(batch_f(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite objective along search segment")
    k = int(np.argmax(vals))
    best_t, best_v = float(ts[k]), float(vals[k])
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, points - 1)]
    if hi > lo:
        t, v = golden_section_max(lambda s: f(np.maximum(x + s * d, 0.0)), lo, hi, tol)
        if v > best_v:
            best_t, best_v = t, v
    return best_t, best_v


# --------------------------------------------------------------------------
# Frank-Wolfe


def _lp_oracle(A: np.ndarray, r: np.ndarray):
    def oracle(g: np.ndarray) -> np.ndarray:
        sol = solve_lp(LpProblem(g, A, r, MAXIMIZE))
        if not sol.optimal:
            raise FloatingPointError(f"linear oracle returned {sol.status}")
        return sol.point

    return oracle


def frank_wolfe(
    value: Callable,
    grad: Callable,
    oracle: Callable,
    x0: np.ndarray,
    opts: SolverOptions = SolverOptions(),
    *,
    keep_trace: bool = False,
) -> FwRun:
    """Away-step Frank-Wolfe ascent from ``x0``.

    ``value`` must accept a single plan or a batch; ``oracle(g)`` returns a
    vertex maximizing ``g . s`` over the feasible polytope. Stops when the
    Frank-Wolfe gap ``g . (s - x) <= gap_tol * (1 + F(x))``.
    """
    x = np.asarray(x0, dtype=float).copy()
    atoms = [x.copy()]
    weights = [1.0]
    fx = float(value(x))
    trace = [fx] if keep_trace else None
    gap = math.inf
    it = 0
    converged = False
    while it < opts.max_iter:
        g = grad(x)
        s = oracle(g)
        gap = float(g @ (s - x))
        if gap <= opts.gap_tol * (1.0 + abs(fx)):
            converged = True
            break
        it += 1
        away_k, away_gap = -1, -math.inf
        if opts.away_steps and len(atoms) > 1:
            scores = [float(g @ v) for v in atoms]
            away_k = int(np.argmin(scores))
            away_gap = float(g @ x) - scores[away_k]
        if away_gap > gap:
            v = atoms[away_k]
            wv = weights[away_k]
            d = x - v
            gmax = wv / (1.0 - wv)
            t, fnew = segment_search(value, value, x, d, gmax, opts.scan_points, opts.line_tol)
            if t <= 0.0:
                # away direction gave nothing; fall back to a plain step
                away_gap = -math.inf
            else:
                weights = [w * (1.0 + t) for w in weights]
                weights[away_k] -= t
                if t >= gmax * (1.0 - 1e-12) or weights[away_k] <= 1e-14:
                    del atoms[away_k], weights[away_k]
        if away_gap <= gap:
            d = s - x
            t, fnew = segment_search(value, value, x, d, 1.0, opts.scan_points, opts.line_tol)
            if t <= 0.0:
                break
            if t >= 1.0 - 1e-14:
                atoms, weights = [s.copy()], [1.0]
            else:
                weights = [w * (1.0 - t) for w in weights]
                for k, v in enumerate(atoms):
                    if np.array_equal(v, s):
                        weights[k] += t
                        break
                else:
                    atoms.append(s.copy())
                    weights.append(t)
        xn = np.maximum(np.sum([w * v for w, v in zip(weights, atoms)], axis=0), 0.0)
        fn = float(value(xn))
        if fn < fx:
            # reassembly round-off; keep the better point and restart the active set there
            xn = np.maximum(x + t * d, 0.0)
            fn = float(value(xn))
            atoms, weights = [xn.copy()], [1.0]
        x, fx = xn, fn
        if keep_trace:
            trace.append(fx)
    return FwRun(
        start=np.asarray(x0, dtype=float),
        plan=x,
        value=fx,
        gap=gap,
        iterations=it,
        converged=converged,
        values=tuple(trace) if keep_trace else (),
    )


def _box(A: np.ndarray, r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        ratio = np.where(A > 0, r[:, None] / np.where(A > 0, A, 1.0), np.inf)
    return ratio.min(axis=0)


def start_points(A: np.ndarray, r: np.ndarray, opts: SolverOptions) -> list[np.ndarray]:
    """Deterministic start list: origin, axis vertices, then seeded boundary points."""
    n = A.shape[1]
    pts = [np.zeros(n)]
    for j, bj in enumerate(_box(A, r)):
        e = np.zeros(n)
        e[j] = bj
        pts.append(e)
    pts = pts[: opts.starts]
    rng = np.random.default_rng(opts.seed)
    while len(pts) < opts.starts:
        d = rng.exponential(size=n)
        use = A @ d
        with np.errstate(divide="ignore"):
            t = np.min(np.where(use > 0, r / np.where(use > 0, use, 1.0), np.inf))
        pts.append(t * d)
    return pts


def _pick_best(runs: list[FwRun]) -> FwRun:
    def key(run):
        return run.value

    top = max(runs, key=key)
    tol = 1e-9 * max(1.0, abs(top.value))
    ties = [run for run in runs if run.value >= top.value - tol]
    return min(ties, key=lambda run: tuple(run.plan))


def solve_primal(p: GpProblem, opts: SolverOptions = SolverOptions()) -> PrimalSolution:
    """Best stationary point over all starts (highest value, then smallest plan)."""
    oracle = _lp_oracle(p.constraint_matrix, p.resources)
    fast = vc.CompiledModel(p.model)
    runs, failures = [], []
    for x0 in start_points(p.constraint_matrix, p.resources, opts):
        try:
            runs.append(frank_wolfe(fast, fast.gradient, oracle, x0, opts))
        except (FloatingPointError, ArithmeticError) as exc:
            failures.append(exc)
    if not runs:
        raise GpSolverError(f"all {len(failures)} starts failed: {failures[0] if failures else 'no starts'}")
    best = _pick_best(runs)
    return PrimalSolution(
        plan=best.plan,
        value=best.value,
        gradient_prices=p.gradient(best.plan),
        slack=p.slack(best.plan),
        starts_used=len(runs),
        stationarity_gap=best.gap,
        iterations=sum(r.iterations for r in runs),
        converged=best.converged,
    )


# --------------------------------------------------------------------------
# dual problem


def build_dual(p: GpProblem, x) -> LpProblem:
    """``min y . r`` s.t. ``y A >= gradient(x)``, ``y >= 0``."""
    x = np.asarray(x, dtype=float)
    g = vc.gradient(x, p.model)
    A = p.constraint_matrix
    return LpProblem(p.resources, A.T, g, MINIMIZE, (">=",) * A.shape[1])


def solve_dual(p: GpProblem, x) -> LpSolution:
    return solve_lp(build_dual(p, x))


# --------------------------------------------------------------------------
# optimality conditions


@dataclass(frozen=True)
class KktTolerances:
    stationarity: float = 1e-3
    feasibility: float = 1e-8
    complementarity: float = 1e-4
    sign: float = 1e-12


@dataclass(frozen=True, eq=False)
class KktReport:
    gradient_prices: np.ndarray
    dual_cost: np.ndarray  # y A
    stationarity_residual: np.ndarray  # g(x) - y A, must be <= 0
    primal_feasibility: np.ndarray  # r - A x, must be >= 0
    complementarity_x: float
    complementarity_y: float
    passed: dict

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())


def _check_xy(p: GpProblem, x, y):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = p.constraint_matrix.shape
    if len(x) != n:
        raise vc.DomainError(f"plan has length {len(x)}, problem has {n} products")
    if len(y) != m:
        raise vc.DomainError(f"price vector has length {len(y)}, problem has {m} resources")
    return x, y


def kkt_check(p: GpProblem, x, y, tol: KktTolerances = KktTolerances()) -> KktReport:
    """Evaluate the Kuhn-Tucker conditions at ``(x, y)``.

    Stationarity is judged per product relative to ``max(1, |g_j|, |(yA)_j|)``,
    feasibility relative to ``1 + |r_i|`` and both complementarity products
    relative to ``max(1, y . r)``.
    """
    x, y = _check_xy(p, x, y)
    A, r = p.constraint_matrix, p.resources
    g = vc.gradient(np.maximum(x, 0.0), p.model)
    ya = y @ A
    res = g - ya
    slack = r - A @ x
    cx = float(res @ x)
    cy = float(y @ slack)
    scale_c = max(1.0, abs(float(y @ r)))
    stat_scale = np.maximum.reduce([np.ones_like(g), np.abs(g), np.abs(ya)])
    passed = {
        "stationarity": bool(np.all(res <= tol.stationarity * stat_scale)),
        "primal_feasibility": bool(np.all(slack >= -tol.feasibility * (1.0 + np.abs(r)))),
        "complementarity_x": abs(cx) <= tol.complementarity * scale_c,
        "complementarity_y": abs(cy) <= tol.complementarity * scale_c,
        "nonnegativity": bool(np.all(x >= -tol.sign) and np.all(y >= -tol.sign)),
    }
    return KktReport(g, ya, res, slack, cx, cy, passed)


@dataclass(frozen=True)
class BalanceLedger:
    gradient_cost_of_plan: float  # g(x) . x
    internal_cost_of_consumed: float  # y . (A x)
    internal_cost_of_stock: float  # y . r
    full_value: float  # F(x)
    gap_consumed: float  # |g.x - y.Ax| / max(1, |y.Ax|)
    gap_stock: float  # |y.Ax - y.r| / max(1, |y.r|)
    gap_total: float  # |g.x - y.r| / max(1, |y.r|)
    gap_full_value: float  # |F - y.r| / max(1, |y.r|)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


def balance_report(p: GpProblem, x, y) -> BalanceLedger:
    """Balance identities between the plan's gradient cost and internal resource costs."""
    x, y = _check_xy(p, x, y)
    A, r = p.constraint_matrix, p.resources
    G = float(vc.gradient_cost(np.maximum(x, 0.0), p.model))
    consumed = float(y @ (A @ x))
    stock = float(y @ r)
    F = float(vc.total_value(np.maximum(x, 0.0), p.model))
    return BalanceLedger(
        gradient_cost_of_plan=G,
        internal_cost_of_consumed=consumed,
        internal_cost_of_stock=stock,
        full_value=F,
        gap_consumed=_rel(G, consumed),
        gap_stock=_rel(consumed, stock),
        gap_total=_rel(G, stock),
        gap_full_value=_rel(F, stock),
    )
