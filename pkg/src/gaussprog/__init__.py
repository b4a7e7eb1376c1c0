"""Gaussian programming: planning with Gaussian value criteria over linear resource constraints."""

from .value_core import (
    DomainError,
    GaussianComponent,
    SetComponent,
    UnsupportedCorrelationError,
    ValueModel,
    component_price,
    component_value,
    gradient,
    gradient_cost,
    independent_value,
    normal_cdf,
    set_value,
    total_value,
)
from .lp_solver import LpProblem, LpSolution, solve_lp, vertex_enumeration_oracle
from .gp_solver import (
    BalanceLedger,
    GpProblem,
    KktReport,
    KktTolerances,
    PrimalSolution,
    SolverOptions,
    balance_report,
    build_dual,
    kkt_check,
    solve_dual,
    solve_primal,
)
from .approx_bridge import (
    GplpProblem,
    UniformComponent,
    gaussian_from_uniform,
    gaussian_to_gplp,
    gplp_to_gaussian,
    gplp_value,
    lp_to_gaussian,
    solve_gplp,
    uniform_from_gaussian,
)
from .modelio import ModelFile, ModelFileError, load_model, read_model_file

__version__ = "0.1.0"
