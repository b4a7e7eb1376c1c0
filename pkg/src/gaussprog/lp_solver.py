"""Dense two-phase simplex for small linear programs.

Variables are always non-negative. Rows are ``<=``, ``>=`` or ``=``.
Pivoting uses the largest reduced cost until a pivot budget of
``10 * (n + m)`` is spent, then switches to Bland's rule, which cannot cycle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
COND_LIMIT = 1e12

_SENSES = {"<=": "<=", "le": "<=", ">=": ">=", "ge": ">=", "=": "=", "==": "=", "eq": "="}


class LpError(Exception):
    pass


class LpDimensionError(LpError, ValueError):
    pass


class SingularBasisError(LpError):
    """Final basis too ill-conditioned to trust the reported vertex."""

    def __init__(self, message, basis=None, condition=None):
        super().__init__(message)
        self.basis = basis
        self.condition = condition


@dataclass(frozen=True, eq=False)
class LpProblem:
    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    sense: str = MAXIMIZE
    row_sense: tuple = None

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).reshape(-1)
        A = np.array(self.constraint_matrix, dtype=float)
        r = np.array(self.rhs, dtype=float).reshape(-1)
        if A.size == 0:
            A = A.reshape(len(r), len(c))
        if A.ndim != 2:
            raise LpDimensionError("constraint matrix must be two-dimensional")
        m, n = A.shape
        if len(c) != n:
            raise LpDimensionError(f"objective has {len(c)} entries, matrix has {n} columns")
        if len(r) != m:
            raise LpDimensionError(f"rhs has {len(r)} entries, matrix has {m} rows")
        if self.sense not in (MAXIMIZE, MINIMIZE):
            raise LpDimensionError(f"sense must be {MAXIMIZE!r} or {MINIMIZE!r}")
        rs = ("<=",) * m if self.row_sense is None else tuple(self.row_sense)
        if len(rs) != m:
            raise LpDimensionError(f"row_sense has {len(rs)} entries, matrix has {m} rows")
        try:
            rs = tuple(_SENSES[s] for s in rs)
        except KeyError as exc:
            raise LpDimensionError(f"unknown row sense {exc.args[0]!r}") from None
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(r))):
            raise LpDimensionError("LP data must be finite")
        for arr in (c, A, r):
            arr.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "rhs", r)
        object.__setattr__(self, "row_sense", rs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.constraint_matrix.shape

    def is_feasible(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < -tol):
            return False
        ax = self.constraint_matrix @ x
        slack = tol * (1.0 + np.abs(self.rhs))
        for i, s in enumerate(self.row_sense):
            if s == "<=" and ax[i] > self.rhs[i] + slack[i]:
                return False
            if s == ">=" and ax[i] < self.rhs[i] - slack[i]:
                return False
            if s == "=" and abs(ax[i] - self.rhs[i]) > slack[i]:
                return False
        return True


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    point: np.ndarray | None = None
    objective_value: float | None = None
    basis: tuple = ()
    duals: np.ndarray | None = None
    pivots: int = 0
    bland_used: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class _Tableau:
    # rows 0..m-1 constraints, last row reduced costs (max form: optimal when all >= -tol)
    T: np.ndarray
    basis: list
    pivots: int = 0
    bland_after: int = 0
    bland_used: bool = False
    pivot_cap: int = 0

    def pivot(self, row: int, col: int):
        T = self.T
        T[row] /= T[row, col]
        for i in range(T.shape[0]):
            if i != row and T[i, col] != 0.0:
                T[i] -= T[i, col] * T[row]
        self.basis[row] = col
        self.pivots += 1


def _run_simplex(tab: _Tableau, allowed: np.ndarray, opt_tol: float) -> str:
    T = tab.T
    m = T.shape[0] - 1
    while True:
        if tab.pivots >= tab.pivot_cap:
            raise LpError(f"simplex exceeded pivot cap {tab.pivot_cap}")
        d = T[-1, :-1]
        cand = np.flatnonzero((d < -opt_tol) & allowed)
        if cand.size == 0:
            return OPTIMAL
        bland = tab.pivots >= tab.bland_after
        if bland:
            tab.bland_used = True
            col = int(cand[0])
        else:
            col = int(cand[np.argmin(d[cand])])
        colvals = T[:m, col]
        scale = max(1.0, float(np.max(np.abs(colvals)))) if m else 1.0
        rows = np.flatnonzero(colvals > PIVOT_TOL * scale)
        if rows.size == 0:
            return UNBOUNDED
        ratios = T[rows, -1] / colvals[rows]
        best = ratios.min()
        tie = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        # smallest basic index among ties (Bland's leaving rule)
        row = int(min(tie, key=lambda i: tab.basis[i]))
        tab.pivot(row, col)


def solve_lp(p: LpProblem, *, bland: bool = False) -> LpSolution:
    """Solve ``p`` with the two-phase simplex method.

    ``bland=True`` applies Bland's rule from the first pivot.
    """
    A0 = p.constraint_matrix
    m, n = A0.shape
    sign = 1.0 if p.sense == MAXIMIZE else -1.0
    c = sign * p.objective

    # normalize to b >= 0
    A = A0.copy()
    b = p.rhs.copy()
    senses = list(p.row_sense)
    flip = np.ones(m)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            flip[i] = -1.0
            senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]

    n_slack = sum(1 for s in senses if s != "=")
    n_art = sum(1 for s in senses if s != "<=")
    N = n + n_slack + n_art
    T = np.zeros((m + 1, N + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = [0] * m
    si, ai = n, n + n_slack
    art_cols = []
    slack_of_row = [-1] * m
    for i, s in enumerate(senses):
        if s == "<=":
            T[i, si] = 1.0
            slack_of_row[i] = si
            basis[i] = si
            si += 1
        else:
            if s == ">=":
                T[i, si] = -1.0
                slack_of_row[i] = si
                si += 1
            T[i, ai] = 1.0
            basis[i] = ai
            art_cols.append(ai)
            ai += 1
    std = T[:m, :N].copy()  # standard-form matrix for the basis check

    guard = 10 * (n + m)
    tab = _Tableau(T, basis, bland_after=0 if bland else guard, pivot_cap=50 * (n + m) + 10 * guard + 500)
    is_art = np.zeros(N, dtype=bool)
    is_art[art_cols] = True
    scale_b = 1.0 + float(np.max(np.abs(b))) if m else 1.0

    # phase 1: maximize -sum(artificials)
    if art_cols:
        T[-1, :] = 0.0
        T[-1, art_cols] = 1.0
        for i in range(m):
            if is_art[basis[i]]:
                T[-1] -= T[i]
        _run_simplex(tab, np.ones(N, dtype=bool), OPT_TOL)
        if -T[-1, -1] > FEAS_TOL * scale_b:
            return LpSolution(INFEASIBLE, pivots=tab.pivots, bland_used=tab.bland_used)
        # drive zero-level artificials out of the basis
        keep = []
        for i in range(m):
            if is_art[basis[i]]:
                row = T[i, :N]
                cand = np.flatnonzero((~is_art) & (np.abs(row) > 1e-9))
                if cand.size:
                    tab.pivot(i, int(cand[np.argmax(np.abs(row[cand]))]))
                    keep.append(i)
                # else: redundant row, dropped below
            else:
                keep.append(i)
        if len(keep) < m:
            rows = keep + [m]
            T = T[rows]
            tab.T = T
            tab.basis = [basis[i] for i in keep]
            std = std[keep]
            basis = tab.basis
        kept_rows = keep
    else:
        kept_rows = list(range(m))

    # phase 2
    m2 = len(kept_rows)
    cfull = np.zeros(N)
    cfull[:n] = c
    T[-1, :] = 0.0
    T[-1, :N] = -cfull
    for i in range(m2):
        cb = cfull[tab.basis[i]]
        if cb != 0.0:
            T[-1] += cb * T[i]
    opt_tol = OPT_TOL * max(1.0, float(np.max(np.abs(c))) if n else 1.0)
    status = _run_simplex(tab, ~is_art, opt_tol)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, pivots=tab.pivots, bland_used=tab.bland_used)

    basis = tuple(int(j) for j in tab.basis)
    x = np.zeros(N)
    if m2:
        B = std[:, list(basis)]
        cond = np.linalg.cond(B)
        if not math.isfinite(cond) or cond > COND_LIMIT:
            raise SingularBasisError(
                f"final basis is numerically singular (cond={cond:.3e}, columns={basis})",
                basis=basis,
                condition=cond,
            )
        xb = np.linalg.solve(B, b[kept_rows])
        x[list(basis)] = xb
        yk = np.linalg.solve(B.T, cfull[list(basis)])
    else:
        yk = np.zeros(0)
    x = np.where(np.abs(x) < 1e-13 * scale_b, 0.0, x)
    point = np.maximum(x[:n], 0.0)
    y = np.zeros(m)
    y[kept_rows] = yk
    duals = sign * y * flip
    sol = LpSolution(
        OPTIMAL,
        point=point,
        objective_value=float(p.objective @ point),
        basis=basis,
        duals=duals,
        pivots=tab.pivots,
        bland_used=tab.bland_used,
    )
    if not p.is_feasible(point):
        raise SingularBasisError(f"recovered vertex violates constraints (basis={basis})", basis=basis)
    return sol


# --------------------------------------------------------------------------
# brute-force oracle


def _vertices(G: np.ndarray, h: np.ndarray, kinds: Sequence[str], E: np.ndarray, e: np.ndarray, tol: float):
    """Yield points where ``n`` independent constraints are tight.

    Inequalities are ``G x (kind) h``; ``E x = e`` is always imposed.
    """
    n = G.shape[1]
    need = n - E.shape[0]
    for combo in itertools.combinations(range(G.shape[0]), need):
        M = np.vstack([G[list(combo)], E]) if E.size else G[list(combo)]
        if np.linalg.matrix_rank(M) < n:
            continue
        rhs = np.concatenate([h[list(combo)], e]) if E.size else h[list(combo)]
        x = np.linalg.solve(M, rhs)
        gx = G @ x
        ok = True
        for i, k in enumerate(kinds):
            lim = tol * (1.0 + abs(h[i]))
            if (k == "<=" and gx[i] > h[i] + lim) or (k == ">=" and gx[i] < h[i] - lim):
                ok = False
                break
        if ok and E.size and np.any(np.abs(E @ x - e) > tol * (1.0 + np.abs(e))):
            ok = False
        if ok:
            yield x, combo


def vertex_enumeration_oracle(p: LpProblem, tol: float = 1e-9) -> LpSolution:
    """Solve ``p`` by enumerating every vertex of the feasible polyhedron.

    Test oracle only; limited to ``n + m <= 12``.
    """
    m, n = p.shape
    if n + m > 12:
        raise LpDimensionError(f"vertex enumeration limited to n + m <= 12, got {n + m}")
    A, r = p.constraint_matrix, p.rhs
    ineq = [i for i, s in enumerate(p.row_sense) if s != "="]
    eq = [i for i, s in enumerate(p.row_sense) if s == "="]
    G = np.vstack([A[ineq], np.eye(n)]) if ineq else np.eye(n)
    h = np.concatenate([r[ineq], np.zeros(n)])
    kinds = [p.row_sense[i] for i in ineq] + [">="] * n
    E, e = A[eq], r[eq]

    sign = 1.0 if p.sense == MAXIMIZE else -1.0
    best = None
    for x, combo in _vertices(G, h, kinds, E, e, tol):
        val = sign * float(p.objective @ x)
        if best is None or val > best[0] + 1e-12 * max(1.0, abs(val)):
            best = (val, x, combo)
    if best is None:
        return LpSolution(INFEASIBLE)

    # recession cone {d >= 0, A d (sense) 0, sum d = 1}; an improving extreme ray means unbounded
    Erec = np.vstack([A[eq], np.ones((1, n))]) if eq else np.ones((1, n))
    erec = np.concatenate([np.zeros(len(eq)), [1.0]])
    for d, _ in _vertices(G, np.concatenate([np.zeros(len(ineq)), np.zeros(n)]), kinds, Erec, erec, tol):
        if sign * float(p.objective @ d) > 1e-9 * max(1.0, float(np.max(np.abs(p.objective)))):
            return LpSolution(UNBOUNDED)

    val, x, combo = best
    x = np.maximum(x, 0.0)
    return LpSolution(OPTIMAL, point=x, objective_value=float(p.objective @ x), basis=tuple(combo))
