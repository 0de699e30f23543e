"""Error classes shared across the solver stack.

Each CLI-visible failure mode gets its own class so exit codes can be
mapped without string matching.
"""


class CmdpError(Exception):
    """Base class for all library errors."""


class InvalidCmdpError(CmdpError):
    """A CMDP failed validation where a valid one is required."""

    def __init__(self, report):
        self.report = report
        lines = ", ".join(f"{k}@{idx}:{mag:g}" for k, idx, mag in report.violations[:8])
        more = "" if len(report.violations) <= 8 else f" (+{len(report.violations) - 8} more)"
        super().__init__(f"invalid CMDP: {lines}{more}")


class InfeasibleOrMTooSmallError(CmdpError):
    """Dual gradient still negative at mu = M: the constrained problem is
    infeasible, or the search cap M is too small."""

    def __init__(self, mu_max, gradient):
        self.mu_max = mu_max
        self.gradient = gradient
        super().__init__(
            f"infeasible-or-M-too-small: gradient {gradient:g} < 0 at mu = {mu_max:g}"
        )


class StagnationError(CmdpError):
    """Outer loop can no longer make progress (should be unreachable on an
    exact piecewise-linear convex dual)."""

    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)


class ConvexityError(CmdpError):
    """Observed dual values violate the convexity assumptions; carries the
    offending points for diagnosis."""

    def __init__(self, message, points=()):
        self.points = tuple(points)
        super().__init__(message)


class DivergenceError(CmdpError):
    """Primal-dual iteration drove the multiplier out of range."""

    def __init__(self, mu, trace=None):
        self.mu = mu
        self.trace = trace
        super().__init__(f"multiplier diverged: mu = {mu:g}")


class ProblemFormatError(CmdpError):
    """A problem or config file could not be parsed or failed validation."""
