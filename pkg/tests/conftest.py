import numpy as np
import pytest

from gaussprog import GaussianComponent, GpProblem, SetComponent, ValueModel

WORKED_PLAN = np.array([33.104, 0.0, 890.688, 165.52])
WORKED_PRICES = np.array([7.94, 12.67, 0.0])
WORKED_GRADIENT = np.array([380.18, 5.4, 523.74, 238.21])
SEC4_A = np.array([[0, 40, 50, 30], [30, 0, 10, 0], [70, 40, 0, 20]], dtype=float)
SEC4_R = np.array([49500, 9900, 5700], dtype=float)


def sec4_model() -> ValueModel:
    return ValueModel(
        4,
        [GaussianComponent(0, 30, 10, 5000), GaussianComponent(1, 40, 13, 10000)],
        [SetComponent.diagonal([2, 3], [900, 100], [300, 30], 200000)],
    )


@pytest.fixture
def model():
    return sec4_model()


@pytest.fixture
def sec4():
    return GpProblem(sec4_model(), SEC4_A, SEC4_R)


def random_model(rng, n: int, allow_sets: bool = True) -> ValueModel:
    """Random partition of n variables into independents and diagonal sets."""
    order = list(rng.permutation(n))
    inds, sets = [], []
    while order:
        k = int(rng.integers(2, 4)) if allow_sets and len(order) >= 2 and rng.random() < 0.4 else 1
        k = min(k, len(order))
        idx, order = order[:k], order[k:]
        m = rng.uniform(5, 100, size=k)
        sigma = m / rng.uniform(1.5, 5, size=k)
        lam = float(rng.uniform(10, 1000))
        if k == 1:
            inds.append(GaussianComponent(int(idx[0]), float(m[0]), float(sigma[0]), lam))
        else:
            sets.append(SetComponent.diagonal([int(i) for i in idx], m, sigma, lam))
    return ValueModel(n, inds, sets)


def random_point(rng, model: ValueModel) -> np.ndarray:
    """Point inside m +/- 2.5 sigma (clipped away from 0) for every coordinate."""
    n = model.dimension
    m = np.zeros(n)
    s = np.zeros(n)
    for c in model.independents:
        m[c.variable_index], s[c.variable_index] = c.m, c.sigma
    for st in model.sets:
        m[list(st.variable_indices)] = st.mean
        s[list(st.variable_indices)] = st.sigmas
    return np.maximum(m + rng.uniform(-2.5, 2.5, size=n) * s, 0.1 * m)


@pytest.fixture(scope="session")
def sec4_solution():
    """Default-options primal solve of the worked example (about 10 s, shared)."""
    from gaussprog import SolverOptions, solve_primal

    return solve_primal(GpProblem(sec4_model(), SEC4_A, SEC4_R), SolverOptions())


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
