"""Baseline multiplier searches: binary search, Lagrangian primal-dual
descent, and a brute-force grid oracle over the dual curve."""

import math
from dataclasses import dataclass

import numpy as np

from .core import require_valid
from .dp import DEFAULT_EPS, DEFAULT_MAX_SWEEPS, DualPoint
from .errors import DivergenceError, InfeasibleOrMTooSmallError, StagnationError
from .gas import DEFAULT_MU_MAX, DualEvaluator, SolveTrace, _finish
from .kernels import grid_scan

MU_DIVERGENCE_CAP = 1e12
PDO_MOVE_TOL = 1e-12


@dataclass(frozen=True)
class PdoParams:
    """Primal-dual descent parameters; kappa decays by e^-xi*T at the T-th
    gradient sign flip."""

    mu0: float = 0.0
    kappa0: float = 1.0
    xi: float = 0.1
    seed: int = 0
    max_outer: int = 1000

    def __post_init__(self):
        if self.kappa0 <= 0.0:
            raise ValueError("kappa0 must be positive")
        if self.xi <= 0.0:
            raise ValueError("xi must be positive")
        if self.mu0 < 0.0:
            raise ValueError("mu0 must be nonnegative")
        if self.max_outer <= 0:
            raise ValueError("max_outer must be positive")


def binary_search_solve(cmdp, mu_max=DEFAULT_MU_MAX, eps=DEFAULT_EPS,
                        eps_prime=DEFAULT_EPS, max_sweeps=DEFAULT_MAX_SWEEPS,
                        cache=None):
    """Bisect on the sign of the dual gradient, halving the window each
    iteration, under the same termination rule as gradient-aware search."""
    if eps_prime <= 0.0 or eps <= 0.0:
        raise ValueError("eps and eps_prime must be positive")
    if mu_max <= 0.0:
        raise ValueError("mu_max must be positive")
    require_valid(cmdp)
    trace = SolveTrace()
    evaluator = DualEvaluator(cmdp, eps, max_sweeps, cache)

    p0, _ = evaluator(0.0, trace, phase="bootstrap")
    if p0.gradient >= 0.0:
        trace.notes.append("gradient >= 0 at mu = 0; constraint slack at optimum")
        return _finish(evaluator, trace, 0.0)
    pM, _ = evaluator(mu_max, trace, phase="bootstrap")
    if pM.gradient < 0.0:
        raise InfeasibleOrMTooSmallError(mu_max, pM.gradient)

    lo, hi = 0.0, mu_max
    o_min = np.inf
    while True:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            raise StagnationError(
                f"window collapsed at [{lo!r}, {hi!r}] without meeting eps'",
                trace=trace)
        point, _ = evaluator(mid, trace)
        # Keep the half with the gradient sign change.
        if point.gradient >= 0.0:
            hi = mid
        else:
            lo = mid
        if abs(o_min - point.objective) <= eps_prime:
            break
        o_min = min(o_min, point.objective)
    return _finish(evaluator, trace, hi)


def pdo_solve(cmdp, params, eps=DEFAULT_EPS, max_sweeps=DEFAULT_MAX_SWEEPS,
              cache=None):
    """Gradient descent on the multiplier with a converged inner loop per
    step and step size decayed at every gradient sign flip.

    Stops when the multiplier moves by <= 1e-12 or max_outer is reached;
    the reported solution is the best evaluated point.
    """
    require_valid(cmdp)
    trace = SolveTrace()
    evaluator = DualEvaluator(cmdp, eps, max_sweeps, cache)

    mu = float(params.mu0)
    kappa = float(params.kappa0)
    flips = 0
    prev_gradient = None
    best = None
    for _ in range(params.max_outer):
        point, _ = evaluator(mu, trace)
        if best is None or point.objective < best.objective:
            best = point
        if prev_gradient is not None and point.gradient * prev_gradient < 0.0:
            flips += 1
            kappa *= math.exp(-params.xi * flips)
        prev_gradient = point.gradient
        mu_next = max(0.0, mu - kappa * point.gradient)
        if mu_next > MU_DIVERGENCE_CAP:
            raise DivergenceError(mu_next, trace=trace)
        if abs(mu_next - mu) <= PDO_MOVE_TOL:
            break
        mu = mu_next
    trace.notes.append(f"sign flips: {flips}")
    return _finish(evaluator, trace, best.mu)


def grid_scan_oracle(cmdp, mu_max, n_points, eps=DEFAULT_EPS,
                     max_sweeps=DEFAULT_MAX_SWEEPS, mu_min=0.0):
    """Converged dual points on a uniform multiplier grid, plus the argmin.

    Brute-force reference against which the search algorithms are checked;
    the grid argmin is within one step of the true minimizer of the
    piecewise-linear convex dual.
    """
    if n_points < 2:
        raise ValueError("need at least two grid points")
    if not (0.0 <= mu_min < mu_max):
        raise ValueError("need 0 <= mu_min < mu_max")
    require_valid(cmdp)
    mus = np.linspace(mu_min, mu_max, int(n_points))
    objective, gradient, inner, converged = grid_scan(
        cmdp.indptr, cmdp.indices, cmdp.data,
        cmdp.rewards, cmdp.costs, cmdp.action_mask,
        cmdp.discount, cmdp.initial_dist, cmdp.constraint_bound,
        mus, float(eps), int(max_sweeps))
    if not converged.all():
        bad = mus[~converged]
        raise StagnationError(f"oracle inner loops failed to converge at mu={bad[:5]}")
    points = [DualPoint(float(m), float(o), float(g))
              for m, o, g in zip(mus, objective, gradient)]
    argmin = int(np.argmin(objective))
    return points, argmin


def refined_scan_oracle(cmdp, mu_max, eps=DEFAULT_EPS, rounds=5,
                        points_per_round=65, mu_min=0.0):
    """Iterated grid scan: zoom on the argmin neighborhood each round.

    Convexity of the dual guarantees the minimizer stays within one grid
    step of the scanned argmin, so the final resolution is
    (width * (4 / points)**rounds) at a few hundred inner loops instead of
    the millions a flat grid of equal resolution would need.
    """
    lo, hi = float(mu_min), float(mu_max)
    best = None
    for _ in range(rounds):
        points, k = grid_scan_oracle(cmdp, hi, points_per_round, eps, mu_min=lo)
        if best is None or points[k].objective < best.objective:
            best = points[k]
        step = (hi - lo) / (points_per_round - 1)
        lo = max(mu_min, points[k].mu - 2 * step)
        hi = min(mu_max, points[k].mu + 2 * step)
        if hi <= lo:
            break
    return best


def convexity_audit(points, tol=1e-6):
    """Second differences of dual samples on a uniform grid; returns
    (ok, worst) where worst is the most negative second difference."""
    obj = np.array([p.objective for p in points])
    if obj.size < 3:
        return True, 0.0
    second = obj[:-2] - 2.0 * obj[1:-1] + obj[2:]
    worst = float(second.min())
    return worst >= -tol, worst
