"""Policy extraction, Monte Carlo rollout evaluation, and Bellman-error
diagnostics.

Rollouts use numpy's Philox-seeded default generator with the stream
split per episode index (``default_rng([seed, episode])``), so episode
results do not depend on evaluation order.  Success is domain semantics:
the environment supplies the predicate, the engine only collects paths.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import penalized_rewards

HORIZON_TAIL = 1e-6  # default horizon H is the smallest with gamma^H below this


@dataclass(frozen=True)
class Policy:
    """Deterministic stationary policy: one action index per state."""

    actions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "actions",
                           np.ascontiguousarray(self.actions, dtype=np.int64))

    def __len__(self):
        return self.actions.shape[0]

    def __getitem__(self, state):
        return int(self.actions[state])


@dataclass(frozen=True)
class RolloutStats:
    n_episodes: int
    horizon: int
    seed: int
    success_count: int
    mean_disc_reward: float
    mean_disc_cost: float
    stderr_disc_reward: float
    stderr_disc_cost: float

    def __post_init__(self):
        if not (0 <= self.success_count <= self.n_episodes):
            raise ValueError("success_count out of range")

    @property
    def success_rate(self):
        return self.success_count / self.n_episodes


def default_horizon(gamma, tail=HORIZON_TAIL):
    """Smallest H with gamma^H < tail; truncation bias below reporting
    precision at the default."""
    return int(math.floor(math.log(tail) / math.log(gamma))) + 1


def _penalized_q(cmdp, values, mu):
    pv = (cmdp.transitions @ values).reshape(cmdp.n_states, cmdp.n_actions)
    q = penalized_rewards(cmdp, mu) + cmdp.discount * pv
    return np.where(cmdp.action_mask, q, -np.inf)


def extract_policy(cmdp, values, mu):
    """Greedy one-step look-ahead policy on the penalized rewards; ties go
    to the lowest action index."""
    return Policy(np.argmax(_penalized_q(cmdp, values, mu), axis=1))


def bellman_error(cmdp, values, mu):
    """Residual of the penalized optimality equation.

    Returns (per_state, (min, mean, max)) where per_state[i] =
    V(i) - max_a[R(i,a) - mu C(i,a) + gamma sum_j P_ij(a) V(j)] and the
    summary statistics are over |per_state|.
    """
    residual = np.asarray(values) - _penalized_q(cmdp, values, mu).max(axis=1)
    mag = np.abs(residual)
    return residual, (float(mag.min()), float(mag.mean()), float(mag.max()))


def _policy_tables(cmdp, policy):
    """Padded next-state/cumulative-probability tables for vectorized
    sampling, plus per-state reward/cost under the policy and an
    absorbing-state mask (self-loop with zero reward and cost)."""
    n = cmdp.n_states
    rows = [policy[i] + i * cmdp.n_actions for i in range(n)]
    widths = [cmdp.indptr[r + 1] - cmdp.indptr[r] for r in rows]
    k = max(widths)
    nxt = np.zeros((n, k), dtype=np.int64)
    cum = np.ones((n, k))
    r_pol = np.empty(n)
    c_pol = np.empty(n)
    absorbing = np.zeros(n, dtype=bool)
    for i, r in enumerate(rows):
        lo, hi = cmdp.indptr[r], cmdp.indptr[r + 1]
        idx = cmdp.indices[lo:hi]
        p = cmdp.data[lo:hi]
        w = hi - lo
        nxt[i, :w] = idx
        nxt[i, w:] = idx[-1] if w else i
        cum[i, :w] = np.cumsum(p)
        cum[i, w - 1:] = 1.0  # guard against rounding shortfall in the tail
        a = policy[i]
        r_pol[i] = cmdp.rewards[i, a]
        c_pol[i] = cmdp.costs[i, a]
        absorbing[i] = (w == 1 and idx[0] == i
                        and r_pol[i] == 0.0 and c_pol[i] == 0.0)
    return nxt, cum, r_pol, c_pol, absorbing


def rollout(cmdp, policy, n_episodes, horizon=None, seed=0, success=None):
    """Monte Carlo evaluation of a deterministic policy.

    ``success`` is an optional predicate over the visited state sequence
    (environments provide it); episodes starting from the initial
    distribution stop early at absorbing states.  Deterministic in seed.
    """
    if horizon is None:
        horizon = default_horizon(cmdp.discount)
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if n_episodes <= 0:
        raise ValueError(f"n_episodes must be positive, got {n_episodes}")
    if len(policy) != cmdp.n_states:
        raise ValueError("policy length does not match the state count")
    for i in range(cmdp.n_states):
        if not cmdp.action_mask[i, policy[i]]:
            raise ValueError(f"policy action {policy[i]} inadmissible at state {i}")

    nxt, cum, r_pol, c_pol, absorbing = _policy_tables(cmdp, policy)
    uniforms = np.empty((n_episodes, horizon))
    starts = np.empty(n_episodes, dtype=np.int64)
    start_cdf = np.cumsum(cmdp.initial_dist)
    for e in range(n_episodes):
        rng = np.random.default_rng([seed, e])
        starts[e] = np.searchsorted(start_cdf, rng.random(), side="right")
        uniforms[e] = rng.random(horizon)

    cur = starts.copy()
    paths = np.full((n_episodes, horizon + 1), -1, dtype=np.int64)
    paths[:, 0] = cur
    disc_r = np.zeros(n_episodes)
    disc_c = np.zeros(n_episodes)
    active = ~absorbing[cur]
    g = 1.0
    for t in range(horizon):
        if not active.any():
            break
        a = np.flatnonzero(active)
        s = cur[a]
        disc_r[a] += g * r_pol[s]
        disc_c[a] += g * c_pol[s]
        step = (uniforms[a, t, None] >= cum[s]).sum(axis=1)
        s_next = nxt[s, step]
        cur[a] = s_next
        paths[a, t + 1] = s_next
        active[a] = ~absorbing[s_next]
        g *= cmdp.discount

    success_count = 0
    if success is not None:
        for e in range(n_episodes):
            p = paths[e]
            if success(p[p >= 0].tolist()):
                success_count += 1
    scale = 1.0 / math.sqrt(n_episodes)
    return RolloutStats(
        n_episodes=n_episodes, horizon=horizon, seed=seed,
        success_count=success_count,
        mean_disc_reward=float(disc_r.mean()),
        mean_disc_cost=float(disc_c.mean()),
        stderr_disc_reward=float(disc_r.std(ddof=1) * scale) if n_episodes > 1 else 0.0,
        stderr_disc_cost=float(disc_c.std(ddof=1) * scale) if n_episodes > 1 else 0.0)


def sample_path(cmdp, policy, horizon=None, seed=0, episode=0):
    """One trajectory realization (state sequence) under the same stream
    layout as :func:`rollout`: episode ``e`` of seed ``s`` reproduces the
    corresponding rollout episode exactly."""
    if horizon is None:
        horizon = default_horizon(cmdp.discount)
    nxt, cum, _, _, absorbing = _policy_tables(cmdp, policy)
    rng = np.random.default_rng([seed, episode])
    start_cdf = np.cumsum(cmdp.initial_dist)
    state = int(np.searchsorted(start_cdf, rng.random(), side="right"))
    uniforms = rng.random(horizon)
    path = [state]
    for t in range(horizon):
        if absorbing[state]:
            break
        step = int((uniforms[t] >= cum[state]).sum())
        state = int(nxt[state, step])
        path.append(state)
    return path
