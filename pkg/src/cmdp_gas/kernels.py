"""Numba kernels for the penalized value-iteration inner loop.

Kept free of Python objects so the grid oracle can drive millions of
inner loops and the 3000-state benchmark models stay within their time
budgets on one core.
"""

import numpy as np
from numba import njit

# Sentinel for "no admissible action found" (never survives validation).
_NEG_INF = -np.inf


@njit(cache=True, nogil=True)
def penalized_vi(indptr, indices, data, rewards, costs, admissible,
                 gamma, mu, eps, max_sweeps):
    """Value iteration on the mu-penalized MDP with interleaved tracking of
    the greedy policy's discounted-cost component.

    Returns (values, cost_values, greedy, sweeps, converged) where
    cost_values[i] is the discounted cost of the greedy policy from state i.

    Stopping: mean relative change of both the value vector and the greedy
    cost vector below ``eps``, with max(|x|, 1) as the denominator guard.
    """
    n_states, n_actions = rewards.shape
    V = np.zeros(n_states)
    V_new = np.empty(n_states)
    w1 = np.zeros((n_states, n_actions))
    w1_new = np.empty((n_states, n_actions))
    w1_greedy = np.zeros(n_states)
    w1_sel = np.empty(n_states)
    greedy = np.zeros(n_states, np.int64)
    sweeps = 0
    converged = False

    for _ in range(max_sweeps):
        sweeps += 1
        # Bellman backup of the penalized value function; ties go to the
        # lowest action index.
        for i in range(n_states):
            best = _NEG_INF
            best_a = -1
            for a in range(n_actions):
                if not admissible[i, a]:
                    continue
                r = i * n_actions + a
                pv = 0.0
                for p in range(indptr[r], indptr[r + 1]):
                    pv += data[p] * V[indices[p]]
                q = rewards[i, a] - mu * costs[i, a] + gamma * pv
                if q > best:
                    best = q
                    best_a = a
            V_new[i] = best
            greedy[i] = best_a

        # Cost recursion under the greedy choices just computed.
        for j in range(n_states):
            w1_sel[j] = w1[j, greedy[j]]
        for i in range(n_states):
            for a in range(n_actions):
                if not admissible[i, a]:
                    w1_new[i, a] = 0.0
                    continue
                r = i * n_actions + a
                pw = 0.0
                for p in range(indptr[r], indptr[r + 1]):
                    pw += data[p] * w1_sel[indices[p]]
                w1_new[i, a] = costs[i, a] + gamma * pw

        dv = 0.0
        dw = 0.0
        for i in range(n_states):
            denom = abs(V[i])
            if denom < 1.0:
                denom = 1.0
            dv += abs(V_new[i] - V[i]) / denom
            wg = w1_new[i, greedy[i]]
            denom = abs(w1_greedy[i])
            if denom < 1.0:
                denom = 1.0
            dw += abs(wg - w1_greedy[i]) / denom
            w1_greedy[i] = wg
        dv /= n_states
        dw /= n_states

        V, V_new = V_new, V
        w1, w1_new = w1_new, w1
        if dv < eps and dw < eps:
            converged = True
            break

    return V, w1_greedy, greedy, sweeps, converged


@njit(cache=True, nogil=True)
def grid_scan(indptr, indices, data, rewards, costs, admissible,
              gamma, beta, bound, mus, eps, max_sweeps):
    """Converged dual objective and gradient on a grid of multipliers."""
    n = mus.shape[0]
    n_states = beta.shape[0]
    objective = np.empty(n)
    gradient = np.empty(n)
    inner_iterations = np.empty(n, np.int64)
    converged = np.empty(n, np.bool_)
    for m in range(n):
        V, w1g, _, sweeps, ok = penalized_vi(
            indptr, indices, data, rewards, costs, admissible,
            gamma, mus[m], eps, max_sweeps)
        o = 0.0
        g = 0.0
        for i in range(n_states):
            o += beta[i] * V[i]
            g += beta[i] * w1g[i]
        objective[m] = o + mus[m] * bound
        gradient[m] = bound - g
        inner_iterations[m] = sweeps
        converged[m] = ok
    return objective, gradient, inner_iterations, converged
