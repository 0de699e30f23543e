"""Finite CMDP data model, validation, and penalized-reward construction.

A CMDP is the tuple (states, actions, transitions, initial distribution,
rewards, costs, discount) plus a scalar upper bound on the expected
discounted cost.  Transitions are stored row-compressed: one sparse row
per (state, action) pair, indexed ``state * n_actions + action``, so
environments with local dynamics (grid moves, battery queues) stay small
at thousands of states.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

ROW_SUM_TOL = 1e-9
DIST_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`; violations are data, not exceptions."""

    ok: bool
    violations: tuple  # of (kind, index, magnitude)


class Cmdp:
    """Immutable finite CMDP.

    Parameters
    ----------
    transitions : (S, A, S) dense array or (S*A, S) sparse matrix.
        Row ``i * n_actions + a`` is the distribution over next states.
    rewards, costs : (S, A) arrays.
    initial_dist : (S,) probability vector.
    discount : gamma in (0, 1).
    constraint_bound : upper bound E on the expected discounted cost.
    action_mask : optional (S, A) bool array of admissible actions.
    """

    def __init__(self, n_states, n_actions, transitions, rewards, costs,
                 initial_dist, discount, constraint_bound, action_mask=None):
        self.n_states = int(n_states)
        self.n_actions = int(n_actions)
        if isinstance(transitions, np.ndarray):
            if transitions.shape != (self.n_states, self.n_actions, self.n_states):
                raise ValueError(f"dense transitions must be (S, A, S), got {transitions.shape}")
            transitions = sp.csr_matrix(
                transitions.reshape(self.n_states * self.n_actions, self.n_states))
        else:
            transitions = sp.csr_matrix(transitions)
            if transitions.shape != (self.n_states * self.n_actions, self.n_states):
                raise ValueError(f"sparse transitions must be (S*A, S), got {transitions.shape}")
        transitions.sort_indices()
        self.transitions = transitions
        self.rewards = np.ascontiguousarray(rewards, dtype=np.float64)
        self.costs = np.ascontiguousarray(costs, dtype=np.float64)
        if self.rewards.shape != (self.n_states, self.n_actions):
            raise ValueError("rewards must be (S, A)")
        if self.costs.shape != (self.n_states, self.n_actions):
            raise ValueError("costs must be (S, A)")
        self.initial_dist = np.ascontiguousarray(initial_dist, dtype=np.float64)
        if self.initial_dist.shape != (self.n_states,):
            raise ValueError("initial_dist must be (S,)")
        self.discount = float(discount)
        self.constraint_bound = float(constraint_bound)
        if action_mask is None:
            action_mask = np.ones((self.n_states, self.n_actions), dtype=bool)
        self.action_mask = np.ascontiguousarray(action_mask, dtype=bool)
        if self.action_mask.shape != (self.n_states, self.n_actions):
            raise ValueError("action_mask must be (S, A)")
        for arr in (self.rewards, self.costs, self.initial_dist, self.action_mask,
                    self.transitions.data, self.transitions.indices, self.transitions.indptr):
            arr.setflags(write=False)

    # CSR pieces for the numba kernels
    @property
    def indptr(self):
        return self.transitions.indptr

    @property
    def indices(self):
        return self.transitions.indices

    @property
    def data(self):
        return self.transitions.data

    def row(self, state, action):
        """Dense transition distribution for one (state, action) pair."""
        return np.asarray(
            self.transitions[state * self.n_actions + action].todense()).ravel()

    def dense_transitions(self):
        return np.asarray(self.transitions.todense()).reshape(
            self.n_states, self.n_actions, self.n_states)

    def __repr__(self):
        return (f"Cmdp(S={self.n_states}, A={self.n_actions}, "
                f"gamma={self.discount}, E={self.constraint_bound})")


def validate(cmdp):
    """Check every structural invariant of a CMDP.

    Returns a :class:`ValidationReport` listing all violations found
    (kind, index tuple, magnitude); never raises and never mutates.
    """
    violations = []
    if not (0.0 < cmdp.discount < 1.0):
        violations.append(("discount", (), cmdp.discount))

    row_sums = np.asarray(cmdp.transitions.sum(axis=1)).ravel()
    mins = cmdp.transitions.min(axis=1).toarray().ravel() if cmdp.transitions.nnz else np.zeros(cmdp.n_states * cmdp.n_actions)
    for i in range(cmdp.n_states):
        for a in range(cmdp.n_actions):
            if not cmdp.action_mask[i, a]:
                continue
            r = i * cmdp.n_actions + a
            defect = abs(row_sums[r] - 1.0)
            if defect > ROW_SUM_TOL:
                violations.append(("row-sum", (i, a), defect))
            if mins[r] < 0.0:
                violations.append(("negative-prob", (i, a), mins[r]))

    beta_defect = abs(cmdp.initial_dist.sum() - 1.0)
    if beta_defect > DIST_SUM_TOL:
        violations.append(("initial-sum", (), beta_defect))
    neg = np.flatnonzero(cmdp.initial_dist < 0.0)
    for i in neg:
        violations.append(("negative-initial", (int(i),), float(cmdp.initial_dist[i])))

    no_action = np.flatnonzero(~cmdp.action_mask.any(axis=1))
    for i in no_action:
        violations.append(("no-admissible-action", (int(i),), 0.0))

    return ValidationReport(ok=not violations, violations=tuple(violations))


def require_valid(cmdp):
    """Raise InvalidCmdpError unless the CMDP validates."""
    from .errors import InvalidCmdpError

    report = validate(cmdp)
    if not report.ok:
        raise InvalidCmdpError(report)
    return cmdp


def penalized_rewards(cmdp, mu):
    """Penalized reward matrix R(i,a) - mu * C(i,a) for mu >= 0."""
    if mu < 0.0:
        raise ValueError(f"multiplier must be nonnegative, got {mu}")
    return cmdp.rewards - mu * cmdp.costs
