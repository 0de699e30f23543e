"""Solvers for finite constrained MDPs via Lagrangian dual search.

The dual objective O(mu) = sum_i beta(i) V*(i, mu) + mu E is piecewise
linear and convex in the multiplier; the gradient-aware search brackets
its minimum with tangent-line intersections, with binary-search and
primal-dual baselines for comparison, plus two benchmark environments.
"""

from .baselines import (PdoParams, binary_search_solve, convexity_audit,
                        grid_scan_oracle, pdo_solve, refined_scan_oracle)
from .core import Cmdp, ValidationReport, penalized_rewards, require_valid, validate
from .dp import (DualPoint, PenalizedSolution, evaluate_dual,
                 objective_and_gradient, value_iteration_penalized)
from .errors import (CmdpError, ConvexityError, DivergenceError,
                     InfeasibleOrMTooSmallError, InvalidCmdpError,
                     ProblemFormatError, StagnationError)
from .fileio import (load_grid_config, load_problem, load_uav_config,
                     save_problem, write_csv, write_json, write_trace_csv)
from .gas import (Bracket, SolveResult, SolveTrace, gas_solve,
                  intersect_tangents, outer_iterations_at, solve_dispatch)
from .gridworld import GridConfig, GridWorld, build_gridworld, build_gridworld_model, generate_obstacles
from .rollout import (Policy, RolloutStats, bellman_error, default_horizon,
                      extract_policy, rollout, sample_path)
from .uav import (UavConfig, UavModel, antenna_gain_db, battery_transition_row,
                  build_uav_cmdp, build_uav_model, coverage_probability, p_los,
                  solar_energy, uav_energy)

__version__ = "0.1.0"

__all__ = [
    "Cmdp", "ValidationReport", "validate", "require_valid", "penalized_rewards",
    "DualPoint", "PenalizedSolution", "value_iteration_penalized",
    "objective_and_gradient", "evaluate_dual",
    "Bracket", "SolveResult", "SolveTrace", "gas_solve", "intersect_tangents",
    "outer_iterations_at", "solve_dispatch",
    "PdoParams", "binary_search_solve", "pdo_solve", "grid_scan_oracle",
    "refined_scan_oracle", "convexity_audit",
    "GridConfig", "GridWorld", "build_gridworld", "build_gridworld_model",
    "generate_obstacles",
    "UavConfig", "UavModel", "build_uav_cmdp", "build_uav_model",
    "antenna_gain_db", "p_los", "coverage_probability", "solar_energy",
    "uav_energy", "battery_transition_row",
    "Policy", "RolloutStats", "extract_policy", "bellman_error", "rollout",
    "sample_path", "default_horizon",
    "load_problem", "save_problem", "load_grid_config", "load_uav_config",
    "write_csv", "write_json", "write_trace_csv",
    "CmdpError", "InvalidCmdpError", "InfeasibleOrMTooSmallError",
    "StagnationError", "ConvexityError", "DivergenceError", "ProblemFormatError",
]
