import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from gaussprog import gp_solver as gs
from gaussprog.gp_solver import (
    GpProblem,
    KktTolerances,
    SolverOptions,
    balance_report,
    build_dual,
    frank_wolfe,
    golden_section_max,
    kkt_check,
    solve_dual,
    solve_primal,
)
from gaussprog.lp_solver import OPTIMAL
from gaussprog.value_core import CompiledModel, DomainError, GaussianComponent, ValueModel, gradient

from conftest import WORKED_GRADIENT, WORKED_PLAN, WORKED_PRICES, SEC4_A, SEC4_R, random_model, sec4_model

FAST = SolverOptions(starts=6, seed=1)


def random_problem(rng, n=None, m=None):
    n = n or int(rng.integers(1, 4))
    m = m or int(rng.integers(1, 4))
    model = random_model(rng, n)
    A = rng.uniform(0.0, 3.0, size=(m, n))
    A[rng.integers(m), :] += 0.5
    ms = np.array([_mean(model, j) for j in range(n)])
    r = (A @ ms) * rng.uniform(0.3, 1.5, size=m)
    return GpProblem(model, A, r)


def _mean(model, j):
    for c in model.independents:
        if c.variable_index == j:
            return c.m
    for s in model.sets:
        if j in s.variable_indices:
            return s.mean[list(s.variable_indices).index(j)]


# -- problem validation ----------------------------------------------------------


def test_problem_validation(model):
    with pytest.raises(DomainError):
        GpProblem(model, -SEC4_A, SEC4_R)
    with pytest.raises(DomainError):
        GpProblem(model, SEC4_A, -SEC4_R)
    zero_col = SEC4_A.copy()
    zero_col[:, 1] = 0
    with pytest.raises(DomainError):
        GpProblem(model, zero_col, SEC4_R)
    with pytest.raises(DomainError):
        GpProblem(model, SEC4_A[:, :3], SEC4_R)


# -- line search -------------------------------------------------------------------


def test_golden_section_finds_interior_max():
    t, v = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0)
    assert t == pytest.approx(0.3, abs=1e-8)
    assert v == pytest.approx(0.0, abs=1e-15)


def test_scan_escapes_local_max_on_segment():
    # two bumps: the golden refine alone would lock onto the nearer one
    f = lambda t: math.exp(-((t - 0.1) / 0.03) ** 2) + 2 * math.exp(-((t - 0.8) / 0.03) ** 2)
    batch = lambda X: np.array([f(float(x[0])) for x in np.atleast_2d(X)])
    t, v = gs.segment_search(batch, lambda x: f(float(x[0])), np.zeros(1), np.ones(1), 1.0)
    assert t == pytest.approx(0.8, abs=1e-6)
    assert v == pytest.approx(2.0, rel=1e-9)


# -- primal ------------------------------------------------------------------------


def test_zero_resources_gives_zero_plan(model):
    sol = solve_primal(GpProblem(model, SEC4_A, np.zeros(3)), FAST)
    np.testing.assert_array_equal(sol.plan, np.zeros(4))
    assert sol.value == 0.0


def test_one_dimensional_exhausts_resource():
    m, sigma, lam, a = 10.0, 2.0, 50.0, 2.0
    r = a * (m + 6 * sigma) * 1.0
    model = ValueModel(1, [GaussianComponent(0, m, sigma, lam)], [])
    sol = solve_primal(GpProblem(model, [[a]], [r]), FAST)
    fast = CompiledModel(model)
    t, v = golden_section_max(lambda x: fast.value(np.array([x])), 0.0, r / a)
    assert t == pytest.approx(r / a, rel=1e-6)
    assert sol.plan[0] == pytest.approx(r / a, rel=1e-9)
    assert sol.value == pytest.approx(v, rel=1e-12)


def test_one_dimensional_interior_resource_is_still_used_fully():
    model = ValueModel(1, [GaussianComponent(0, 10, 2, 50)], [])
    sol = solve_primal(GpProblem(model, [[1.0]], [7.0]), FAST)
    assert sol.plan[0] == pytest.approx(7.0, rel=1e-9)


def test_sec4_solution_quality(sec4_solution):
    assert sec4_solution.value >= 197812.64 * (1 - 0.005)
    nz = WORKED_PLAN > 0
    np.testing.assert_allclose(sec4_solution.plan[nz], WORKED_PLAN[nz], rtol=0.01)
    assert sec4_solution.plan[1] <= 1e-6
    assert sec4_solution.starts_used == 32
    assert sec4_solution.slack[2] == pytest.approx(72.312, rel=5e-3)


def test_sec4_solution_feasible(sec4_solution):
    assert np.all(sec4_solution.plan >= -1e-12)
    assert np.all(sec4_solution.slack >= -1e-8 * (1 + SEC4_R))
    np.testing.assert_allclose(sec4_solution.slack, SEC4_R - SEC4_A @ sec4_solution.plan, rtol=0, atol=1e-9)


def test_start_points_are_deterministic_and_feasible():
    opts = SolverOptions(starts=10, seed=4)
    a = gs.start_points(SEC4_A, SEC4_R, opts)
    b = gs.start_points(SEC4_A, SEC4_R, opts)
    assert len(a) == 10
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p, q)
        assert np.all(SEC4_A @ p <= SEC4_R * (1 + 1e-12))
    np.testing.assert_array_equal(a[0], np.zeros(4))


def test_tie_break_prefers_lexicographically_smallest_plan():
    runs = [
        gs.FwRun(np.zeros(2), np.array([1.0, 0.0]), 5.0, 0.0, 1, True),
        gs.FwRun(np.zeros(2), np.array([0.0, 1.0]), 5.0 * (1 + 1e-12), 0.0, 1, True),
        gs.FwRun(np.zeros(2), np.array([0.0, 0.5]), 4.0, 0.0, 1, True),
    ]
    assert tuple(gs._pick_best(runs).plan) == (0.0, 1.0)
    runs[0] = gs.FwRun(np.zeros(2), np.array([1.0, 0.0]), 6.0, 0.0, 1, True)
    assert tuple(gs._pick_best(runs).plan) == (1.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_ascent(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng)
    fast = CompiledModel(p.model)
    oracle = gs._lp_oracle(p.constraint_matrix, p.resources)
    x0 = gs.start_points(p.constraint_matrix, p.resources, SolverOptions(starts=3, seed=seed % 1000))[-1]
    run = frank_wolfe(fast, fast.gradient, oracle, x0, SolverOptions(max_iter=300), keep_trace=True)
    v = np.array(run.values)
    assert np.all(v[1:] >= v[:-1] - 1e-12 * (1 + np.abs(v[:-1])))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_primal_feasibility(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng)
    sol = solve_primal(p, SolverOptions(starts=4, seed=2, max_iter=500))
    A, r = p.constraint_matrix, p.resources
    assert np.all(sol.plan >= -1e-12)
    assert np.all(A @ sol.plan <= r + 1e-8 * (1 + np.abs(r)))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_kkt_at_solver_optimum(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng)
    sol = solve_primal(p, SolverOptions(starts=4, seed=3))
    dual = solve_dual(p, sol.plan)
    assert dual.status == OPTIMAL
    rep = kkt_check(p, sol.plan, dual.point)
    yr = float(dual.point @ p.resources)
    tol = 1e-3
    active = sol.plan > tol
    scale = np.maximum(1.0, np.abs(rep.gradient_prices))
    if sol.converged:
        assert np.all(np.abs(rep.stationarity_residual[active]) <= tol * scale[active])
        assert abs(rep.complementarity_x) <= 1e-4 * max(1.0, yr)
    assert abs(rep.complementarity_y) <= 1e-4 * max(1.0, yr)
    assert rep.passed["stationarity"]
    assert rep.passed["primal_feasibility"]


def test_determinism():
    rng = np.random.default_rng(8)
    p = random_problem(rng, 3, 2)
    a = solve_primal(p, SolverOptions(starts=8, seed=5))
    b = solve_primal(p, SolverOptions(starts=8, seed=5))
    assert a.plan.tobytes() == b.plan.tobytes()
    assert repr(a.value) == repr(b.value)


def test_lambda_scaling_keeps_plan():
    rng = np.random.default_rng(21)
    p = random_problem(rng, 3, 2)
    q = GpProblem(p.model.scaled(4.0), p.constraint_matrix, p.resources)
    a, b = solve_primal(p, FAST), solve_primal(q, FAST)
    np.testing.assert_allclose(b.plan, a.plan, rtol=1e-6, atol=1e-8)
    assert b.value == pytest.approx(4 * a.value, rel=1e-8)


# -- dual -----------------------------------------------------------------------


def test_build_dual_sec4(sec4):
    lp = build_dual(sec4, WORKED_PLAN)
    np.testing.assert_allclose(lp.rhs, WORKED_GRADIENT, rtol=0.01)
    np.testing.assert_array_equal(lp.rhs, gradient(WORKED_PLAN, sec4.model))
    np.testing.assert_array_equal(lp.objective, SEC4_R)
    np.testing.assert_array_equal(lp.constraint_matrix, SEC4_A.T)
    assert lp.sense == "minimize"


def test_solve_dual_sec4(sec4):
    sol = solve_dual(sec4, WORKED_PLAN)
    assert sol.status == OPTIMAL
    np.testing.assert_allclose(sol.point[:2], WORKED_PRICES[:2], rtol=0.02)
    assert abs(sol.point[2]) <= 0.02
    assert sol.objective_value == pytest.approx(518502.36, rel=5e-3)


def test_zero_lambda_dual_is_zero():
    model = ValueModel(2, [GaussianComponent(0, 5, 1, 0.0), GaussianComponent(1, 5, 1, 0.0)], [])
    p = GpProblem(model, [[1.0, 2.0]], [10.0])
    sol = solve_dual(p, [1.0, 1.0])
    assert sol.status == OPTIMAL
    np.testing.assert_array_equal(sol.point, [0.0])
    assert sol.objective_value == 0.0


@pytest.mark.parametrize("t", [0.5, 2.0, 3.0])
def test_dual_rescaled_data_matches_resolve_oracle(sec4, t):
    scaled = GpProblem(sec4.model, SEC4_A, t * SEC4_R)
    x = t * WORKED_PLAN
    sol = solve_dual(scaled, x)
    g = gradient(x, sec4.model)
    ref = linprog(t * SEC4_R, A_ub=-SEC4_A.T, b_ub=-g, method="highs")
    assert sol.objective_value == pytest.approx(ref.fun, rel=1e-8)
    # the constraint side is unchanged, so prices at fixed g scale the objective by t
    base = solve_dual(sec4, WORKED_PLAN)
    fixed = linprog(t * SEC4_R, A_ub=-SEC4_A.T, b_ub=-base_g(sec4), method="highs")
    assert fixed.fun == pytest.approx(t * base.objective_value, rel=1e-8)


def base_g(p):
    return gradient(WORKED_PLAN, p.model)


# -- KKT ---------------------------------------------------------------------------


def test_kkt_sec4_worked_pair(sec4):
    rep = kkt_check(sec4, WORKED_PLAN, WORKED_PRICES)
    assert rep.stationarity_residual[1] == pytest.approx(-312.21, rel=0.01)
    for j in (0, 2, 3):
        assert abs(rep.stationarity_residual[j]) <= 1e-3 * max(1.0, rep.gradient_prices[j])
    assert rep.primal_feasibility[2] == pytest.approx(72.312, rel=5e-3)
    assert abs(rep.primal_feasibility[0]) < 1e-6 * SEC4_R[0]
    assert abs(rep.primal_feasibility[1]) < 1e-6 * SEC4_R[1]
    yr = WORKED_PRICES @ SEC4_R
    assert abs(rep.complementarity_x) <= 1e-3 * yr
    assert abs(rep.complementarity_y) <= 1e-3 * yr
    assert rep.all_passed
    assert set(rep.passed) == {"stationarity", "primal_feasibility", "complementarity_x", "complementarity_y", "nonnegativity"}


def test_kkt_zero_pair_fails_stationarity(sec4):
    rep = kkt_check(sec4, np.zeros(4), np.zeros(3))
    assert not rep.passed["stationarity"]
    assert rep.passed["complementarity_x"]
    assert rep.passed["complementarity_y"]
    # the set factors vanish at 0, so only the independent products have a price there
    assert np.all(rep.stationarity_residual[:2] > 0)
    np.testing.assert_array_equal(rep.stationarity_residual[2:], 0.0)


def test_kkt_perturbed_binding_price_flags_complementarity(sec4):
    y = WORKED_PRICES.copy()
    y[0] *= 1.1
    rep = kkt_check(sec4, WORKED_PLAN, y)
    assert not rep.passed["complementarity_x"]


def test_kkt_positive_price_on_slack_resource_flags_complementarity_y(sec4):
    y = WORKED_PRICES.copy()
    y[2] = 1.0
    rep = kkt_check(sec4, WORKED_PLAN, y)
    assert rep.complementarity_y == pytest.approx(72.312, rel=5e-3)
    assert not rep.passed["complementarity_y"]
    y[2] = 0.5  # 36 units is under 1e-4 of y.r
    assert kkt_check(sec4, WORKED_PLAN, y).passed["complementarity_y"]


def test_kkt_flags_are_pure_functions_of_tolerances(sec4):
    loose = kkt_check(sec4, WORKED_PLAN, WORKED_PRICES, KktTolerances(stationarity=1.0))
    tight = kkt_check(sec4, WORKED_PLAN, WORKED_PRICES, KktTolerances(complementarity=1e-9))
    np.testing.assert_array_equal(loose.stationarity_residual, tight.stationarity_residual)
    assert loose.passed["stationarity"]
    assert not tight.passed["complementarity_x"]


def test_kkt_dimension_mismatch(sec4):
    with pytest.raises(DomainError):
        kkt_check(sec4, np.zeros(3), np.zeros(3))
    with pytest.raises(DomainError):
        balance_report(sec4, np.zeros(4), np.zeros(2))


# -- balance ------------------------------------------------------------------------


def test_balance_sec4_worked_pair(sec4):
    led = balance_report(sec4, WORKED_PLAN, WORKED_PRICES)
    assert led.gradient_cost_of_plan == pytest.approx(518502.33, rel=5e-3)
    assert led.internal_cost_of_consumed == pytest.approx(518502.36, rel=5e-3)
    assert led.internal_cost_of_stock == pytest.approx(518502.36, rel=5e-3)
    assert led.full_value == pytest.approx(197812.64, rel=5e-3)
    assert led.gap_full_value > 0.5


def test_balance_at_solver_optimum(sec4, sec4_solution):
    y = solve_dual(sec4, sec4_solution.plan).point
    led = balance_report(sec4, sec4_solution.plan, y)
    assert led.gap_consumed <= 1e-4
    assert led.gap_stock <= 1e-4
    assert led.gap_total <= 1e-4
    assert led.gap_full_value > 0.5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stock_identity_from_dual_alone(seed):
    # holds for any feasible x once y solves the dual at x
    rng = np.random.default_rng(seed)
    p = random_problem(rng)
    x = gs.start_points(p.constraint_matrix, p.resources, SolverOptions(starts=3, seed=seed % 97))[-1] * rng.uniform(0, 1)
    sol = solve_dual(p, x)
    led = balance_report(p, x, sol.point)
    # y (r - Ax) = 0 is complementary slackness of the dual, not of the primal
    assert sol.objective_value == pytest.approx(led.internal_cost_of_stock, rel=1e-9, abs=1e-9)


def test_balance_zero_pair(sec4):
    led = balance_report(sec4, np.zeros(4), np.zeros(3))
    for name in ("gradient_cost_of_plan", "internal_cost_of_consumed", "internal_cost_of_stock", "full_value"):
        assert getattr(led, name) == 0.0
