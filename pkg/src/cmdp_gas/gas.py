"""Outer loop of the gradient-aware search solver.

Maintains a bracket {mu- with negative dual gradient, mu+ with
non-negative gradient}, queries the inner loop at the intersection of the
two tangent lines, and stops when the objective at the query matches the
best objective seen within eps'.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .core import require_valid
from .dp import DEFAULT_EPS, DEFAULT_MAX_SWEEPS, DualPoint, evaluate_dual
from .errors import ConvexityError, InfeasibleOrMTooSmallError, StagnationError

DEFAULT_MU_MAX = 1e5
# Tolerated intersection overshoot past the bracket.  Finite-precision
# inner loops perturb the objective by roughly eps * |V| / (1 - gamma),
# which displaces the tangent intersection by that amount over the
# gradient gap; overshoots below this slack are rounding, not broken
# convexity, and are clamped to the bracket edge.
INTERSECT_SLACK = 1e-9

TRACE_COLUMNS = ("outer_iter", "mu", "objective", "gradient",
                 "inner_iterations", "cumulative_inner_iterations",
                 "wall_time_ms")


@dataclass(frozen=True)
class Bracket:
    """Retained pair of dual points with opposite gradient signs."""

    lo: DualPoint  # gradient < 0
    hi: DualPoint  # gradient >= 0

    def __post_init__(self):
        if not (self.lo.mu < self.hi.mu):
            raise ValueError(f"bracket out of order: {self.lo.mu} >= {self.hi.mu}")
        if not (self.lo.gradient < 0.0 <= self.hi.gradient):
            raise ValueError(
                f"bracket gradients must straddle zero: "
                f"{self.lo.gradient}, {self.hi.gradient}")

    @property
    def width(self):
        return self.hi.mu - self.lo.mu


@dataclass(frozen=True)
class TraceRecord:
    outer_iter: int
    mu: float
    objective: float
    gradient: float
    inner_iterations: int
    cumulative_inner_iterations: int
    wall_time_ms: float
    phase: str = "search"  # bootstrap | search | final (not serialized)


@dataclass
class SolveTrace:
    """Per-outer-iteration log of one solve."""

    records: list = field(default_factory=list)
    bracket_widths: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def append(self, record):
        self.records.append(record)

    @property
    def search_records(self):
        return [r for r in self.records if r.phase == "search"]

    @property
    def cumulative_inner_iterations(self):
        return self.records[-1].cumulative_inner_iterations if self.records else 0


@dataclass(frozen=True)
class SolveResult:
    mu_star: float
    values: np.ndarray
    policy: np.ndarray
    objective: float
    trace: SolveTrace
    gradient: float = float("nan")   # dual gradient at mu_star
    cost_values: np.ndarray = None   # discounted costs of the policy


def intersect_tangents(lo, hi):
    """Multiplier where the tangent line at ``lo`` meets the one at ``hi``.

    Raises ConvexityError for parallel lines or an intersection outside
    [lo.mu, hi.mu] by more than a rounding slack; otherwise the result is
    clamped into the bracket.
    """
    if not (lo.mu < hi.mu):
        raise ValueError(f"expected lo.mu < hi.mu, got {lo.mu}, {hi.mu}")
    denom = lo.gradient - hi.gradient
    if denom == 0.0:
        raise ConvexityError("parallel tangent lines", points=(lo, hi))
    mu_x = (hi.objective - lo.objective
            + lo.gradient * lo.mu - hi.gradient * hi.mu) / denom
    slack = INTERSECT_SLACK * max(1.0, abs(lo.mu), abs(hi.mu))
    if mu_x < lo.mu - slack or mu_x > hi.mu + slack:
        raise ConvexityError(
            f"tangent intersection {mu_x:g} escapes bracket "
            f"[{lo.mu:g}, {hi.mu:g}]", points=(lo, hi))
    return min(max(mu_x, lo.mu), hi.mu)


class DualEvaluator:
    """Memoized access to converged dual points, with trace recording.

    The cache makes re-queries of an already-evaluated multiplier free,
    so a solver that lands on the same cusp twice terminates after a
    single inner-loop evaluation there.  A cache may be shared between
    solver runs on the same CMDP.
    """

    def __init__(self, cmdp, eps=DEFAULT_EPS, max_sweeps=DEFAULT_MAX_SWEEPS,
                 cache=None):
        self.cmdp = cmdp
        self.eps = eps
        self.max_sweeps = max_sweeps
        self.cache = {} if cache is None else cache
        self.cumulative_inner = 0
        self._t0 = time.perf_counter()

    def __call__(self, mu, trace, phase="search"):
        mu = float(mu)
        hit = mu in self.cache
        if hit:
            point, sol = self.cache[mu]
            sweeps = 0
        else:
            point, sol = evaluate_dual(
                self.cmdp, mu, self.eps, self.max_sweeps, validated=True)
            if not sol.converged:
                raise StagnationError(
                    f"inner loop exhausted {self.max_sweeps} sweeps at mu={mu:g}",
                    trace=trace)
            self.cache[mu] = (point, sol)
            sweeps = sol.inner_iterations
        self.cumulative_inner += sweeps
        trace.append(TraceRecord(
            outer_iter=len(trace.records),
            mu=mu, objective=point.objective, gradient=point.gradient,
            inner_iterations=sweeps,
            cumulative_inner_iterations=self.cumulative_inner,
            wall_time_ms=(time.perf_counter() - self._t0) * 1e3,
            phase=phase))
        return point, sol

    def peek(self, mu):
        return self.cache.get(float(mu))


def _finish(evaluator, trace, mu_star):
    """Re-run (or fetch) the inner loop at mu_star and assemble the result."""
    point, sol = evaluator(mu_star, trace, phase="final")
    objective = min(r.objective for r in trace.records)
    return SolveResult(
        mu_star=float(mu_star), values=sol.values, policy=sol.greedy_policy,
        objective=objective, trace=trace,
        gradient=point.gradient, cost_values=sol.cost_values)


def gas_solve(cmdp, mu_max=DEFAULT_MU_MAX, eps=DEFAULT_EPS,
              eps_prime=DEFAULT_EPS, max_sweeps=DEFAULT_MAX_SWEEPS,
              cache=None):
    """Gradient-aware search for the minimizing multiplier of the dual.

    Bootstraps the bracket at mu=0 and mu=mu_max, then repeatedly
    evaluates the tangent-line intersection.  Degenerate cases: a
    non-negative gradient at mu=0 returns mu*=0 immediately; a negative
    gradient at mu=mu_max raises InfeasibleOrMTooSmallError.
    """
    if eps_prime <= 0.0 or eps <= 0.0:
        raise ValueError("eps and eps_prime must be positive")
    if mu_max <= 0.0:
        raise ValueError("mu_max must be positive")
    require_valid(cmdp)
    trace = SolveTrace()
    evaluator = DualEvaluator(cmdp, eps, max_sweeps, cache)

    p0, _ = evaluator(0.0, trace, phase="bootstrap")
    if p0.gradient >= 0.0:
        # Unconstrained optimum already feasible; the bracket degenerates.
        trace.notes.append("gradient >= 0 at mu = 0; constraint slack at optimum")
        return _finish(evaluator, trace, 0.0)
    pM, _ = evaluator(mu_max, trace, phase="bootstrap")
    if pM.gradient < 0.0:
        raise InfeasibleOrMTooSmallError(mu_max, pM.gradient)

    bracket = Bracket(lo=p0, hi=pM)
    o_min = np.inf
    while True:
        mu_x = intersect_tangents(bracket.lo, bracket.hi)
        point, _ = evaluator(mu_x, trace)  # free when mu_x was seen before
        if abs(o_min - point.objective) <= eps_prime:
            break
        o_min = min(o_min, point.objective)
        width_before = bracket.width
        if point.gradient >= 0.0:
            bracket = Bracket(lo=bracket.lo, hi=point)
        else:
            bracket = Bracket(lo=point, hi=bracket.hi)
        trace.bracket_widths.append(bracket.width)
        if not bracket.width < width_before:
            raise StagnationError(
                f"bracket width stalled at {bracket.width:g}", trace=trace)

    mu_star = bracket.hi.mu
    final_mu_x = trace.search_records[-1].mu if trace.search_records else mu_star
    if final_mu_x != mu_star:
        trace.notes.append(
            f"final query mu={final_mu_x!r} differs from mu_star={mu_star!r}; "
            f"values re-solved at mu_star")
    return _finish(evaluator, trace, mu_star)


def outer_iterations_at(trace, eps_prime):
    """Outer iterations the recorded run would have used at a looser eps'.

    Replays the termination rule |O_min - O(mu_query)| <= eps' over the
    recorded search queries; valid because the query sequence is
    deterministic and independent of eps' up to the stopping point.
    Returns None if the run never met the tolerance.
    """
    o_min = np.inf
    for n, rec in enumerate(trace.search_records):
        if abs(o_min - rec.objective) <= eps_prime:
            return n + 1
        o_min = min(o_min, rec.objective)
    return None


def solve_dispatch(cmdp, algo, **params):
    """Uniform entry point over the three solvers."""
    from . import baselines

    if algo == "gas":
        return gas_solve(cmdp, **params)
    if algo == "bs":
        return baselines.binary_search_solve(cmdp, **params)
    if algo == "pdo":
        pdo_keys = {f.name for f in baselines.PdoParams.__dataclass_fields__.values()}
        pdo_kwargs = {k: v for k, v in params.items() if k in pdo_keys}
        rest = {k: v for k, v in params.items() if k not in pdo_keys}
        return baselines.pdo_solve(cmdp, baselines.PdoParams(**pdo_kwargs), **rest)
    raise ValueError(f"unknown algorithm {algo!r}; expected gas, bs, or pdo")
