import numpy as np
import pytest

from cmdp_gas import (GridConfig, Policy, bellman_error, build_gridworld_model,
                      default_horizon, extract_policy, gas_solve, rollout,
                      sample_path, value_iteration_penalized)


class TestExtractPolicy:
    def test_toy_greedy_switches_with_mu(self, toy):
        sol0 = value_iteration_penalized(toy, 0.0)
        assert extract_policy(toy, sol0.values, 0.0)[0] == 1  # take R=2
        sol1 = value_iteration_penalized(toy, 1.0)
        assert extract_policy(toy, sol1.values, 1.0)[0] == 0  # penalty flips it

    def test_tie_goes_to_lowest_index(self, toy):
        # At the cusp mu=0.5 both actions score 2.0 + 0.5 V.
        sol = value_iteration_penalized(toy, 0.5)
        assert extract_policy(toy, sol.values, 0.5)[0] == 0

    def test_policy_container(self):
        p = Policy([1, 0, 2])
        assert len(p) == 3
        assert p[2] == 2
        assert p.actions.dtype == np.int64


class TestBellmanError:
    def test_zero_values_toy(self, toy):
        # With V = 0 the greedy backup is max(1, 2) = 2, residual -2.
        residual, (lo, mean, hi) = bellman_error(toy, np.zeros(1), 0.0)
        assert residual[0] == pytest.approx(-2.0)
        assert lo == mean == hi == pytest.approx(2.0)

    def test_converged_values_are_fixed_point(self, grid_model):
        result = gas_solve(grid_model.cmdp, eps=1e-12)
        _, (_, _, worst) = bellman_error(grid_model.cmdp, result.values,
                                         result.mu_star)
        assert worst <= 1e-6


class TestDefaultHorizon:
    def test_benchmark_discount(self):
        assert default_horizon(0.99) == 1375
        assert 0.99 ** 1375 < 1e-6 <= 0.99 ** 1374

    def test_faster_discount_is_shorter(self):
        assert default_horizon(0.5) == 20


class TestRollout:
    def test_deterministic_corridor_always_succeeds(self):
        config = GridConfig(slip=0.0, obstacles=[])
        model = build_gridworld_model(config)
        result = gas_solve(model.cmdp, eps=1e-10)
        stats = rollout(model.cmdp, Policy(result.policy), n_episodes=50,
                        seed=3, success=model.reached_goal)
        assert stats.success_rate == 1.0
        # 17 steps right at -1 each, the goal bonus arriving on the last.
        expected = sum(-(0.99 ** t) for t in range(17)) + 200.0 * 0.99 ** 16
        assert stats.mean_disc_reward == pytest.approx(expected)
        assert stats.stderr_disc_reward == 0.0

    def test_same_seed_reproduces(self, grid_model):
        result = gas_solve(grid_model.cmdp, eps=1e-10)
        policy = Policy(result.policy)
        a = rollout(grid_model.cmdp, policy, 200, seed=7,
                    success=grid_model.reached_goal)
        b = rollout(grid_model.cmdp, policy, 200, seed=7,
                    success=grid_model.reached_goal)
        assert a == b
        c = rollout(grid_model.cmdp, policy, 200, seed=8,
                    success=grid_model.reached_goal)
        assert c.mean_disc_reward != a.mean_disc_reward

    def test_monte_carlo_matches_dual_cost(self, grid_model):
        # The MC discounted cost should sit within 3 standard errors of
        # the exact discounted cost of the same policy.
        result = gas_solve(grid_model.cmdp, eps=1e-12)
        exact_cost = float(grid_model.cmdp.initial_dist @ result.cost_values)
        stats = rollout(grid_model.cmdp, Policy(result.policy), 2000, seed=0)
        assert abs(stats.mean_disc_cost - exact_cost) <= \
            3.0 * max(stats.stderr_disc_cost, 1e-9)

    def test_input_validation(self, toy):
        policy = Policy([0])
        with pytest.raises(ValueError):
            rollout(toy, policy, n_episodes=0)
        with pytest.raises(ValueError):
            rollout(toy, policy, n_episodes=5, horizon=0)
        with pytest.raises(ValueError):
            rollout(toy, Policy([0, 1]), n_episodes=5)

    def test_masked_action_rejected(self):
        from cmdp_gas import Cmdp
        cmdp = Cmdp(1, 2, np.ones((1, 2, 1)), np.array([[1.0, 2.0]]),
                    np.array([[0.0, 2.0]]), np.array([1.0]), 0.5, 1.0,
                    action_mask=np.array([[True, False]]))
        with pytest.raises(ValueError):
            rollout(cmdp, Policy([1]), n_episodes=5)


class TestSamplePath:
    def test_reproduces_rollout_episode(self, grid_model):
        result = gas_solve(grid_model.cmdp, eps=1e-10)
        policy = Policy(result.policy)
        path = sample_path(grid_model.cmdp, policy, seed=7, episode=3)
        assert path[0] == grid_model.start_state
        again = sample_path(grid_model.cmdp, policy, seed=7, episode=3)
        assert path == again
        # Distinct episode streams are independent; over a batch some
        # trajectory must realize a different slip pattern.
        others = [sample_path(grid_model.cmdp, policy, seed=7, episode=e)
                  for e in range(4, 24)]
        assert any(o != path for o in others)

    def test_stops_at_absorbing_state(self, grid_model):
        result = gas_solve(grid_model.cmdp, eps=1e-10)
        path = sample_path(grid_model.cmdp, Policy(result.policy),
                           seed=1, episode=0)
        assert path[-1] == grid_model.terminal_state
        assert len(path) < default_horizon(0.99) + 1
