"""Inner loop: value iteration on the mu-penalized MDP.

Solves V(i, mu) = max_a [R(i,a) - mu C(i,a) + gamma sum_j P_ij(a) V(j, mu)]
while simultaneously evaluating the discounted cost of the greedy policy,
which is exactly the mu-coefficient of the dual objective and yields the
dual gradient without finite differences.
"""

from dataclasses import dataclass

import numpy as np

from .core import require_valid
from .kernels import penalized_vi

DEFAULT_EPS = 1e-10
DEFAULT_MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class DualPoint:
    """One evaluated point on the piecewise-linear convex dual curve."""

    mu: float
    objective: float
    gradient: float


@dataclass(frozen=True)
class PenalizedSolution:
    mu: float
    values: np.ndarray          # V(i, mu)
    cost_values: np.ndarray     # discounted cost of the greedy policy per state
    greedy_policy: np.ndarray   # action index per state
    inner_iterations: int
    converged: bool


def value_iteration_penalized(cmdp, mu, eps=DEFAULT_EPS,
                              max_sweeps=DEFAULT_MAX_SWEEPS, validated=False):
    """Run the penalized inner loop at multiplier ``mu``.

    Values start from zero each call (no warm start).  ``converged`` is
    False only when ``max_sweeps`` ran out first; the caller decides
    whether that is an error.
    """
    if mu < 0.0:
        raise ValueError(f"multiplier must be nonnegative, got {mu}")
    if eps <= 0.0:
        raise ValueError(f"tolerance must be positive, got {eps}")
    if max_sweeps <= 0:
        raise ValueError(f"max_sweeps must be positive, got {max_sweeps}")
    if not validated:
        require_valid(cmdp)

    V, w1g, greedy, sweeps, ok = penalized_vi(
        cmdp.indptr, cmdp.indices, cmdp.data,
        cmdp.rewards, cmdp.costs, cmdp.action_mask,
        cmdp.discount, float(mu), float(eps), int(max_sweeps))
    return PenalizedSolution(
        mu=float(mu), values=V, cost_values=w1g, greedy_policy=greedy,
        inner_iterations=int(sweeps), converged=bool(ok))


def objective_and_gradient(cmdp, sol):
    """Dual objective O(mu) = sum_i beta(i) V(i,mu) + mu E and its gradient
    E - sum_i beta(i) cost_values(i), from a converged inner solution."""
    if not sol.converged:
        raise ValueError("inner loop did not converge; objective undefined")
    beta = cmdp.initial_dist
    objective = float(beta @ sol.values + sol.mu * cmdp.constraint_bound)
    gradient = float(cmdp.constraint_bound - beta @ sol.cost_values)
    return DualPoint(mu=sol.mu, objective=objective, gradient=gradient)


def evaluate_dual(cmdp, mu, eps=DEFAULT_EPS, max_sweeps=DEFAULT_MAX_SWEEPS,
                  validated=False):
    """Convenience: inner loop plus dual point in one call."""
    sol = value_iteration_penalized(cmdp, mu, eps, max_sweeps, validated=validated)
    return objective_and_gradient(cmdp, sol), sol
