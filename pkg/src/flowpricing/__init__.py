"""Optimal pricing control for distribution networks with time-varying supply."""

from .control import (
    ControllerConfig,
    feedback_output,
    feedback_rhs,
    feedforward_output,
    feedforward_rhs,
    residual_z,
    state_laplacian,
    xi_matrix,
)
from .costs import LegendreCost, LogCosBarrier, QuadraticCost
from .dirichlet import build_x, solve_dirichlet, tree_weight
from .exosystem import HarmonicExo, Reset
from .network import Network, algebraic_connectivity, cuts, laplacian_pinv, spanning_trees
from .optimizer import (
    check_cut_feasibility,
    check_spanning_tree_infinite,
    dual_objective,
    min_infnorm_flow_value,
    solve_static,
)
from .scenario import load_scenario, parse_scenario
from .sim import lyapunov_metrics, run_closed_loop, step_rk4

__version__ = "0.1.0"
