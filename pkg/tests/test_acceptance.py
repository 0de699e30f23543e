"""End-to-end acceptance suite.

Each test covers one acceptance criterion and emits a single PASS/FAIL
line (bypassing capture so the line lands in the test log) before
asserting.  Criteria with stated runtime budgets time themselves.
"""

import time
import warnings

import numpy as np
import pytest

import cmdp_gas as cg
from cmdp_gas.cli import main as cli_main

from _instances import MU_CAP

EPS_PRIMES = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)
MU_MAXES = (1e3, 1e5)


@pytest.fixture
def verdict(capfd):
    """Emit one PASS/FAIL line per criterion, bypassing capture so the
    line always reaches the test log, then assert."""
    def emit(name, ok):
        with capfd.disabled():
            print(f"[{'PASS' if ok else 'FAIL'}] {name}", flush=True)
        assert ok, name
    return emit


def test_criterion_1_pwlc_convexity(instances, verdict):
    t0 = time.perf_counter()
    worst_overall = 0.0
    for _, cmdp in instances:
        points, _ = cg.grid_scan_oracle(cmdp, MU_CAP, 101, eps=1e-10)
        ok, worst = cg.convexity_audit(points, tol=1e-6)
        worst_overall = min(worst_overall, worst)
        if not ok:
            break
    elapsed = time.perf_counter() - t0
    verdict(
        f"criterion 1: dual convex on 101-point scans of 50 instances "
        f"(worst second difference {worst_overall:.2e}, {elapsed:.1f}s < 30s)",
        ok and elapsed < 30.0)


def test_criterion_2_oracle_equivalence(instances, toy, verdict):
    t0 = time.perf_counter()
    eps_prime = 1e-9
    ok = True
    for _, cmdp in instances:
        result = cg.gas_solve(cmdp, mu_max=MU_CAP, eps=1e-12,
                              eps_prime=eps_prime)
        points, argmin = cg.grid_scan_oracle(cmdp, MU_CAP, 20000, eps=1e-12)
        step = MU_CAP / 19999.0
        bound = step * max(abs(p.gradient) for p in points) + eps_prime
        if abs(result.objective - points[argmin].objective) > bound:
            ok = False
            break
    toy_result = cg.gas_solve(toy, mu_max=2.0)
    toy_ok = (toy_result.mu_star == pytest.approx(0.5, abs=1e-9)
              and toy_result.objective == pytest.approx(2.5, abs=1e-9))
    elapsed = time.perf_counter() - t0
    verdict(
        f"criterion 2: search matches 2e4-point grid minima on 50 instances "
        f"and the analytic toy (mu*={toy_result.mu_star:.10f}, "
        f"{elapsed:.1f}s < 120s)",
        ok and toy_ok and elapsed < 120.0)


def test_criterion_3_gradient_check(instances, verdict):
    h = 1e-5
    eps = 1e-14
    checked = 0
    worst = 0.0
    ok = True
    for seed, cmdp in instances:
        rng = np.random.default_rng([20240818, seed])
        accepted = 0
        attempts = 0
        while accepted < 20 and attempts < 200:
            attempts += 1
            mu = float(rng.uniform(0.0, MU_CAP))
            _, lo = cg.evaluate_dual(cmdp, mu - h, eps, 200000)
            _, hi = cg.evaluate_dual(cmdp, mu + h, eps, 200000)
            if not np.array_equal(lo.greedy_policy, hi.greedy_policy):
                continue  # cusp within the perturbation window
            accepted += 1
            point, _ = cg.evaluate_dual(cmdp, mu, eps, 200000)
            fd = ((cmdp.initial_dist @ hi.values + (mu + h) * cmdp.constraint_bound)
                  - (cmdp.initial_dist @ lo.values + (mu - h) * cmdp.constraint_bound)
                  ) / (2.0 * h)
            tol = max(1e-6, 1e-4 * abs(point.gradient))
            err = abs(fd - point.gradient)
            worst = max(worst, err / tol)
            if err > tol:
                ok = False
        checked += accepted
    verdict(
        f"criterion 3: finite-difference gradients match analytic dual "
        f"gradients at {checked} non-cusp multipliers "
        f"(worst error {worst:.3f}x tolerance)",
        ok and checked >= 900)


def test_criterion_4_gas_vs_bs_iterations(request, verdict):
    t0 = time.perf_counter()
    grid_runs = request.getfixturevalue("grid_runs")
    uav_runs = request.getfixturevalue("uav_runs")
    ok = True
    for runs in (grid_runs, uav_runs):
        for mu_max in MU_MAXES:
            gas_trace = runs[("gas", mu_max)].trace
            bs_trace = runs[("bs", mu_max)].trace
            for eps_prime in EPS_PRIMES:
                n_gas = cg.outer_iterations_at(gas_trace, eps_prime)
                n_bs = cg.outer_iterations_at(bs_trace, eps_prime)
                if n_gas is None or n_bs is None or n_gas > n_bs:
                    ok = False
    elapsed = time.perf_counter() - t0
    verdict(
        f"criterion 4: gradient-aware search outer iterations <= binary "
        f"search for all eps' x M on both benchmarks ({elapsed:.1f}s < 600s)",
        ok and elapsed < 600.0)


def test_criterion_5_solver_agreement(grid_model, verdict):
    cmdp = grid_model.cmdp
    gas = cg.gas_solve(cmdp, mu_max=1e3, eps=1e-12, eps_prime=1e-9)
    bs = cg.binary_search_solve(cmdp, mu_max=1e3, eps=1e-12, eps_prime=1e-9)
    oracle = cg.refined_scan_oracle(cmdp, 1e3, eps=1e-12)
    objectives = (gas.objective, bs.objective, oracle.objective)
    spread = max(objectives) - min(objectives)

    target = min(objectives)
    good_seeds = 0
    for s in range(20):
        rng = np.random.default_rng([1234, s])
        params = cg.PdoParams(mu0=float(rng.uniform(0.0, 1.0)),
                              kappa0=1e-3, xi=0.01, seed=s, max_outer=250)
        result = cg.pdo_solve(cmdp, params, eps=1e-8)
        if result.objective <= target + 1e-2:
            good_seeds += 1
    verdict(
        f"criterion 5: grid-world dual minima agree within 1e-3 "
        f"(spread {spread:.2e}); primal-dual descent within 1e-2 for "
        f"{good_seeds}/20 seeds",
        spread <= 1e-3 and good_seeds >= 15)


def test_criterion_6_uav_model(request, uav_model, verdict):
    t0 = time.perf_counter()
    cmdp = uav_model.cmdp
    shape_ok = cmdp.n_states == 3025 and cmdp.n_actions == 12
    row_sums = np.abs(np.asarray(cmdp.transitions.sum(axis=1)).ravel() - 1.0)
    rows_ok = row_sums.max() <= 1e-12

    result = request.getfixturevalue("uav_runs")[("gas", 1e3)]
    _, (_, _, be_max) = cg.bellman_error(cmdp, result.values, result.mu_star)
    solve_ok = result.gradient >= 0.0 and be_max <= 1e-6

    # The reference-value regression is best-effort: the physical model
    # has documented ambiguities, so a miss is logged, not failed.
    ref_mu, ref_obj = 0.030786, 93.92830
    mu_err = abs(result.mu_star - ref_mu) / ref_mu
    obj_err = abs(result.objective - ref_obj) / ref_obj
    if mu_err > 0.10 or obj_err > 0.10:
        warnings.warn(
            f"UAV regression outside 10%: mu*={result.mu_star:.6f} "
            f"(ref {ref_mu}, {100 * mu_err:.1f}%), O={result.objective:.5f} "
            f"(ref {ref_obj}, {100 * obj_err:.1f}%)")
    elapsed = time.perf_counter() - t0
    verdict(
        f"criterion 6: uav model 3025x12, row sums within "
        f"{row_sums.max():.1e}, solve gradient {result.gradient:.3e} >= 0, "
        f"max Bellman error {be_max:.1e} ({elapsed:.1f}s < 900s)",
        shape_ok and rows_ok and solve_ok and elapsed < 900.0)


def test_criterion_7_rollout_consistency(grid_models_by_bound, verdict):
    rates = {}
    cost_ok = True
    for bound in (5.0, 160.0):
        model = grid_models_by_bound(bound)
        result = cg.gas_solve(model.cmdp, mu_max=1e3, eps=1e-12, eps_prime=1e-9)
        stats = cg.rollout(model.cmdp, cg.Policy(result.policy), 2000, seed=0,
                           success=model.reached_goal_clean)
        rates[bound] = stats.success_rate
        exact_cost = float(model.cmdp.initial_dist @ result.cost_values)
        if abs(stats.mean_disc_cost - exact_cost) > 3.0 * stats.stderr_disc_cost:
            cost_ok = False
    verdict(
        f"criterion 7: clean-success rate {rates[5.0]:.4f} at E=5 exceeds "
        f"{rates[160.0]:.4f} at E=160; rollout costs within 3 standard "
        f"errors of the exact discounted costs",
        rates[5.0] > rates[160.0] and cost_ok)


def test_criterion_8_determinism(tmp_path, toy, verdict):
    problem = tmp_path / "toy.json"
    cg.save_problem(toy, str(problem))
    artifacts = {
        "solve": ["trace.csv", "result.json", "policy.json"],
        "bench": ["bs_compare.csv"],
        "rollout": ["rollout.json", "path.csv"],
    }
    blobs = []
    for run in ("a", "b"):
        outs = {cmd: tmp_path / f"{cmd}-{run}" for cmd in artifacts}
        assert cli_main(["solve", "--problem", str(problem), "--mu-max", "2.0",
                         "--no-timing", "--out", str(outs["solve"])]) == 0
        assert cli_main(["bench", "--problem", str(problem),
                         "--suite", "bs-compare", "--mu-max-grid", "2.0",
                         "--out", str(outs["bench"])]) == 0
        assert cli_main(["rollout", "--problem", str(problem),
                         "--episodes", "100", "--seed", "5",
                         "--out", str(outs["rollout"])]) == 0
        blobs.append({f"{cmd}/{name}": (outs[cmd] / name).read_bytes()
                      for cmd, names in artifacts.items() for name in names})
    verdict(
        "criterion 8: repeated solve/bench/rollout runs are byte-identical",
        blobs[0] == blobs[1])
