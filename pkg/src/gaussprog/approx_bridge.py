"""Conversions between linear, Gaussian and piecewise-linear planning models.

A Gaussian component ``(m, sigma, lam)`` and a uniform value ramp on
``[a, b]`` are paired by equal mean and standard deviation:
``a = m - sigma sqrt(3)``, ``b = m + sigma sqrt(3)``, total value ``2 lam``.

The generalized piecewise-linear (GPLP) model values each product with a
saturating ramp: zero below ``a``, linear on ``[a, b]``, ``mass`` above ``b``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import value_core as vc
from .gp_solver import GpProblem, PrimalSolution, SolverOptions, _lp_oracle, _pick_best, frank_wolfe, start_points
from .lp_solver import LpProblem, MAXIMIZE, MINIMIZE, OPTIMAL, solve_lp

SQRT3 = math.sqrt(3.0)
BOX_MIN = "min"
BOX_PAPER_MAX = "paper-max"
EXACT_LIMIT = 10


class UnsupportedModelError(vc.DomainError):
    pass


@dataclass(frozen=True)
class UniformComponent:
    variable_index: int
    a: float
    b: float
    mass: float

    def __post_init__(self):
        if int(self.variable_index) != self.variable_index or self.variable_index < 0:
            raise vc.DomainError(f"variable_index must be a non-negative integer, got {self.variable_index!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b) and math.isfinite(self.mass)):
            raise vc.DomainError("ramp parameters must be finite")
        if self.a < 0:
            raise vc.DomainError(f"ramp start a must be >= 0, got {self.a}")
        if self.b <= self.a:
            raise vc.DomainError(f"ramp end b must exceed a ({self.a}), got {self.b}")
        if self.mass < 0:
            raise vc.DomainError(f"mass must be >= 0, got {self.mass}")

    @property
    def slope(self) -> float:
        return self.mass / (self.b - self.a)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = self.mass * np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GplpProblem:
    components: tuple
    constraint_matrix: np.ndarray
    resources: np.ndarray

    def __post_init__(self):
        comps = tuple(sorted(self.components, key=lambda u: u.variable_index))
        n = len(comps)
        if [u.variable_index for u in comps] != list(range(n)):
            raise vc.DomainError("GPLP needs exactly one ramp per variable, indexed 0..n-1")
        A = np.array(self.constraint_matrix, dtype=float)
        r = np.array(self.resources, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[1] != n:
            raise vc.DomainError(f"constraint matrix must have {n} columns")
        if A.shape[0] != len(r):
            raise vc.DomainError(f"constraint matrix has {A.shape[0]} rows, resource vector has {len(r)} entries")
        A.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "resources", r)

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def total_mass(self) -> float:
        return float(sum(u.mass for u in self.components))


# --------------------------------------------------------------------------
# moment matching


def uniform_from_gaussian(c: vc.GaussianComponent) -> UniformComponent:
    """Uniform ramp with the mean and standard deviation of ``c``.

    If ``m - sigma sqrt(3) < 0`` the ramp start is clamped to 0 and the whole
    mass is spread over ``[0, b]``.
    """
    a = c.m - c.sigma * SQRT3
    b = c.m + c.sigma * SQRT3
    return UniformComponent(c.variable_index, max(a, 0.0), b, 2.0 * c.lam)


def gaussian_from_uniform(u: UniformComponent) -> vc.GaussianComponent:
    return vc.GaussianComponent(u.variable_index, 0.5 * (u.a + u.b), (u.b - u.a) / (2.0 * SQRT3), 0.5 * u.mass)


def lp_box(p: LpProblem, rule: str = BOX_MIN) -> np.ndarray:
    """Upper bounds ``b_j`` of a box enclosing ``{A x <= r, x >= 0}``.

    ``min`` takes the tightest single-row bound ``min_i r_i / a_ij`` over rows
    with ``a_ij > 0``; ``paper-max`` takes the largest such ratio.
    """
    A, r = p.constraint_matrix, p.rhs
    n = A.shape[1]
    out = np.empty(n)
    for j in range(n):
        rows = np.flatnonzero(A[:, j] > 0)
        if rows.size == 0:
            raise vc.DomainError(f"variable {j} has no positive constraint coefficient; its box is unbounded")
        ratios = r[rows] / A[rows, j]
        out[j] = ratios.min() if rule == BOX_MIN else ratios.max()
    return out


def lp_to_gaussian(p: LpProblem, box_rule: str = BOX_MIN) -> GpProblem:
    """Gaussian approximation of ``max c x, A x <= r, x >= 0``.

    Each variable gets ``m = b/2``, ``sigma = b / (2 sqrt 3)`` and
    ``lam = c b / 2``, so the Gaussian ceiling ``2 lam`` equals the LP value
    ``c b`` at the box corner.
    """
    if box_rule not in (BOX_MIN, BOX_PAPER_MAX):
        raise ValueError(f"box rule must be {BOX_MIN!r} or {BOX_PAPER_MAX!r}")
    if p.sense != MAXIMIZE or any(s != "<=" for s in p.row_sense):
        raise UnsupportedModelError("only maximization problems with <= rows can be approximated")
    if np.any(p.objective < 0):
        raise UnsupportedModelError("negative prices have no Gaussian value counterpart")
    if np.any(p.constraint_matrix < 0) or np.any(p.rhs < 0):
        raise UnsupportedModelError("resource data must be non-negative")
    box = lp_box(p, box_rule)
    if np.any(box <= 0):
        bad = np.flatnonzero(box <= 0).tolist()
        raise vc.DomainError(f"variables {bad} have a zero-width box")
    comps = [
        vc.GaussianComponent(j, b / 2.0, b / (2.0 * SQRT3), c * b / 2.0)
        for j, (b, c) in enumerate(zip(box, p.objective))
    ]
    model = vc.ValueModel(len(comps), comps, [])
    return GpProblem(model, p.constraint_matrix, p.rhs)


def gaussian_to_gplp(p: GpProblem) -> GplpProblem:
    if p.model.sets:
        raise UnsupportedModelError(
            "complete sets cannot be converted to independent ramps; approximating a set "
            "would need a rotation and shift of the coordinate axes, which is not supported"
        )
    comps = [uniform_from_gaussian(c) for c in p.model.independents]
    return GplpProblem(comps, p.constraint_matrix, p.resources)


def gplp_to_gaussian(p: GplpProblem) -> GpProblem:
    comps = [gaussian_from_uniform(u) for u in p.components]
    return GpProblem(vc.ValueModel(len(comps), comps, []), p.constraint_matrix, p.resources)


# --------------------------------------------------------------------------
# GPLP evaluation and solution


def gplp_value(x, p: GplpProblem):
    """Sum of saturating ramps at plan ``x`` (single plan or batch)."""
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != p.dimension:
        raise vc.DomainError(f"plan has length {arr.shape[-1]}, model has {p.dimension} variables")
    if np.any(arr < 0):
        raise vc.DomainError("quantities must be non-negative")
    a = np.array([u.a for u in p.components])
    b = np.array([u.b for u in p.components])
    mass = np.array([u.mass for u in p.components])
    out = np.sum(mass * np.clip((arr - a) / (b - a), 0.0, 1.0), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def gplp_slopes(x, p: GplpProblem) -> np.ndarray:
    """Right-derivative of each ramp at ``x`` (0 below ``a`` and from ``b`` on)."""
    x = np.asarray(x, dtype=float)
    return np.array([u.slope if u.a <= xj < u.b else 0.0 for u, xj in zip(p.components, x)])


BELOW, RAMP, ABOVE = 0, 1, 2


def _region_lp(p: GplpProblem, segs) -> tuple[LpProblem, float]:
    """LP over one segment box; returns the problem and the constant term."""
    n = p.dimension
    rows = [p.constraint_matrix]
    rhs = [p.resources]
    senses = ["<="] * len(p.resources)
    c = np.zeros(n)
    const = 0.0
    for j, (u, seg) in enumerate(zip(p.components, segs)):
        e = np.zeros((1, n))
        e[0, j] = 1.0
        if seg == BELOW:
            rows.append(e), rhs.append([u.a]), senses.append("<=")
        elif seg == RAMP:
            rows += [e, e]
            rhs += [[u.a], [u.b]]
            senses += [">=", "<="]
            c[j] = u.slope
            const -= u.slope * u.a
        else:
            rows.append(e), rhs.append([u.b]), senses.append(">=")
            const += u.mass
    lp = LpProblem(c, np.vstack(rows), np.concatenate([np.asarray(v, dtype=float) for v in rhs]), MAXIMIZE, senses)
    return lp, const


def _lex_min(lp: LpProblem, target: float, tol: float) -> np.ndarray | None:
    """Lexicographically smallest point of ``lp`` whose objective is >= target - tol."""
    A = np.vstack([lp.constraint_matrix, lp.objective[None, :]])
    r = np.concatenate([lp.rhs, [target - tol]])
    senses = list(lp.row_sense) + [">="]
    n = len(lp.objective)
    x = None
    for j in range(n):
        c = np.zeros(n)
        c[j] = 1.0
        sol = solve_lp(LpProblem(c, A, r, MINIMIZE, senses))
        if sol.status != OPTIMAL:
            return x
        x = sol.point
        e = np.zeros((1, n))
        e[0, j] = 1.0
        A = np.vstack([A, e])
        r = np.concatenate([r, [x[j] + 1e-12 * max(1.0, abs(x[j]))]])
        senses.append("<=")
    return x


def _primal_solution(p: GplpProblem, x, starts, gap=0.0, iterations=0, status="optimal", converged=True):
    return PrimalSolution(
        plan=x,
        value=gplp_value(x, p),
        gradient_prices=gplp_slopes(x, p),
        slack=p.resources - p.constraint_matrix @ x,
        starts_used=starts,
        stationarity_gap=gap,
        status=status,
        iterations=iterations,
        converged=converged,
    )


def solve_gplp_exact(p: GplpProblem) -> PrimalSolution:
    """Global optimum by enumerating all ``3^n`` segment boxes.

    Within a box the value is linear, so each box is one LP. Among optimal
    plans the lexicographically smallest is returned.
    """
    n = p.dimension
    if n > EXACT_LIMIT:
        raise vc.DomainError(f"exact GPLP enumeration is limited to n <= {EXACT_LIMIT}")
    found = []
    for segs in itertools.product((BELOW, RAMP, ABOVE), repeat=n):
        lp, const = _region_lp(p, segs)
        sol = solve_lp(lp)
        if sol.status != OPTIMAL:
            continue
        found.append((sol.objective_value + const, segs, lp, const))
    if not found:
        return PrimalSolution(
            plan=np.full(n, np.nan), value=float("nan"), gradient_prices=np.full(n, np.nan),
            slack=np.full(len(p.resources), np.nan), starts_used=0, stationarity_gap=float("nan"),
            status="infeasible", converged=False,
        )
    best = max(v for v, *_ in found)
    tol = 1e-9 * max(1.0, abs(best))
    plans = []
    for v, segs, lp, const in found:
        if v >= best - tol:
            # the slack only absorbs round-off, so the lex-min stays on the optimal face
            x = _lex_min(lp, v - const, 1e-12 * max(1.0, abs(v)))
            if x is not None:
                plans.append(x)
    x = min(plans, key=tuple) if plans else None
    return _primal_solution(p, x, starts=len(found))


def _envelope_slopes(x, p: GplpProblem) -> np.ndarray:
    # secant slope mass/b below b: ascent direction of the concave envelope of each ramp
    return np.array([u.mass / u.b if xj < u.b else 0.0 for u, xj in zip(p.components, np.asarray(x))])


def solve_gplp_heuristic(p: GplpProblem, opts: SolverOptions = SolverOptions()) -> PrimalSolution:
    """Multi-start Frank-Wolfe driven by concave-envelope subgradients."""
    A, r = p.constraint_matrix, p.resources
    if np.any(A < 0) or np.any(r < 0) or not np.all((A > 0).any(axis=0)):
        raise vc.DomainError("the heuristic needs A >= 0, r >= 0 and a positive entry in every column")
    oracle = _lp_oracle(A, r)

    def value(x):
        return gplp_value(np.maximum(x, 0.0), p)

    def slopes(x):
        return _envelope_slopes(x, p)

    runs = [frank_wolfe(value, slopes, oracle, x0, opts) for x0 in start_points(A, r, opts)]
    best = _pick_best(runs)
    return _primal_solution(
        p, best.plan, len(runs), best.gap, sum(run.iterations for run in runs), converged=best.converged
    )


def solve_gplp(p: GplpProblem, opts: SolverOptions = SolverOptions()) -> PrimalSolution:
    """Exact region enumeration for ``n <= 10``, the heuristic beyond."""
    if p.dimension <= EXACT_LIMIT:
        return solve_gplp_exact(p)
    return solve_gplp_heuristic(p, opts)
