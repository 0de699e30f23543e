"""Command-line entry points.

Subcommands: ``solve`` (multiplier search on a problem or built
environment), ``scan`` (dual-curve grid scan), ``bench`` (comparison
suites), ``rollout`` (Monte Carlo policy evaluation), and ``build-env``
(emit an environment as a problem file).

Exit codes: 0 converged; 2 infeasible-or-M-too-small; 3 stagnation or
divergence; 4 I/O or config error.  ``CMDP_GAS_THREADS`` caps worker
parallelism for independent bench runs (0 = auto).
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio
from .baselines import PdoParams, convexity_audit, grid_scan_oracle, pdo_solve
from .dp import DEFAULT_EPS, DEFAULT_MAX_SWEEPS
from .errors import (CmdpError, ConvexityError, DivergenceError,
                     InfeasibleOrMTooSmallError, InvalidCmdpError,
                     ProblemFormatError, StagnationError)
from .gas import DEFAULT_MU_MAX, outer_iterations_at, solve_dispatch
from .gridworld import GridConfig, build_gridworld_model
from .rollout import Policy, bellman_error, rollout, sample_path
from .uav import UavConfig, build_uav_model

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_STAGNATION = 3
EXIT_CONFIG = 4

DEFAULT_EPS_PRIME_GRID = "1e-2,1e-4,1e-6,1e-8,1e-10"
# Canonical generated layout: 30 corridor-biased obstacles whose safe
# detour keeps even the tightest benchmark constraint level feasible.
DEFAULT_OBSTACLES = {"count": 30, "seed": 11}
DEFAULT_MU_MAX_GRID = "1e3,1e5"
DEFAULT_XI_GRID = "0.01,0.05,0.1,0.5,1.0"


def worker_count():
    """Parallelism cap from CMDP_GAS_THREADS (0 or unset = auto)."""
    raw = os.environ.get("CMDP_GAS_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ProblemFormatError(f"CMDP_GAS_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ProblemFormatError(f"CMDP_GAS_THREADS must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def _add_problem_args(parser):
    parser.add_argument("--problem", help="CMDP problem file (JSON)")
    parser.add_argument("--env", choices=("gridworld", "uav"),
                        help="build a benchmark environment instead")
    parser.add_argument("--env-config", help="environment config file (JSON)")


def _load_model(args):
    """Resolve --problem/--env to (cmdp, model-or-None)."""
    if (args.problem is None) == (args.env is None):
        raise ProblemFormatError("exactly one of --problem and --env is required")
    if args.problem is not None:
        return fileio.load_problem(args.problem), None
    if args.env == "gridworld":
        config = (fileio.load_grid_config(args.env_config)
                  if args.env_config else GridConfig(obstacles=DEFAULT_OBSTACLES))
        model = build_gridworld_model(config)
    else:
        config = (fileio.load_uav_config(args.env_config)
                  if args.env_config else UavConfig())
        model = build_uav_model(config)
    return model.cmdp, model


def _success_predicate(model):
    if model is None:
        return None
    if hasattr(model, "reached_goal_clean"):
        return model.reached_goal_clean
    return model.battery_never_empty


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_solve(args):
    cmdp, _ = _load_model(args)
    out = _outdir(args.out)
    params = {"mu_max": args.mu_max, "eps": args.eps,
              "eps_prime": args.eps_prime, "max_sweeps": args.max_sweeps}
    if args.algo == "pdo":
        params = {"eps": args.eps, "max_sweeps": args.max_sweeps,
                  "mu0": args.mu0, "kappa0": args.kappa0, "xi": args.xi,
                  "seed": args.seed, "max_outer": args.max_outer}
    result = solve_dispatch(cmdp, args.algo, **params)
    fileio.write_trace_csv(result.trace, os.path.join(out, "trace.csv"),
                           include_timing=not args.no_timing)
    _, (be_min, be_mean, be_max) = bellman_error(cmdp, result.values, result.mu_star)
    fileio.write_json(os.path.join(out, "result.json"), {
        "algo": args.algo,
        "mu_star": result.mu_star,
        "objective": result.objective,
        "gradient": result.gradient,
        "outer_iterations": len(result.trace.search_records),
        "cumulative_inner_iterations": result.trace.cumulative_inner_iterations,
        "bellman_error": {"min": be_min, "mean": be_mean, "max": be_max},
        "notes": list(result.trace.notes),
    })
    fileio.write_json(os.path.join(out, "policy.json"), {
        "mu_star": result.mu_star,
        "actions": result.policy.tolist(),
    })
    print(f"mu_star={result.mu_star!r} objective={result.objective!r} "
          f"gradient={result.gradient!r}")
    return EXIT_OK


def cmd_scan(args):
    cmdp, _ = _load_model(args)
    out = _outdir(args.out)
    points, argmin = grid_scan_oracle(
        cmdp, args.mu_max, args.points, eps=args.eps,
        max_sweeps=args.max_sweeps, mu_min=args.mu_min)
    convex_ok, worst = convexity_audit(points)
    fileio.write_csv(os.path.join(out, "scan.csv"),
                     ("mu", "objective", "gradient"),
                     [(p.mu, p.objective, p.gradient) for p in points])
    fileio.write_json(os.path.join(out, "scan.json"), {
        "argmin_mu": points[argmin].mu,
        "argmin_objective": points[argmin].objective,
        "convex_ok": bool(convex_ok),
        "worst_second_difference": worst,
    })
    print(f"argmin mu={points[argmin].mu!r} "
          f"objective={points[argmin].objective!r} convex_ok={convex_ok}")
    return EXIT_OK


def _bench_bs_compare(cmdp, args, out):
    eps_primes = sorted((float(x) for x in args.eps_prime_grid.split(",")),
                        reverse=True)
    mu_maxes = [float(x) for x in args.mu_max_grid.split(",")]
    tightest = min(eps_primes)
    rows = []
    for mu_max in mu_maxes:
        cache = {}
        traces = {}
        for algo in ("gas", "bs"):
            result = solve_dispatch(
                cmdp, algo, mu_max=mu_max, eps=args.eps, eps_prime=tightest,
                max_sweeps=args.max_sweeps, cache=cache)
            traces[algo] = result.trace
        for ep in eps_primes:
            rows.append((ep, mu_max,
                         outer_iterations_at(traces["gas"], ep),
                         outer_iterations_at(traces["bs"], ep)))
    fileio.write_csv(os.path.join(out, "bs_compare.csv"),
                     ("eps_prime", "mu_max", "gas_outer_iterations",
                      "bs_outer_iterations"), rows)


def _bench_pdo_sweep(cmdp, args, out):
    xis = [float(x) for x in args.xi_grid.split(",")]
    n_seeds = args.seeds

    def one_run(xi, seed):
        rng = np.random.default_rng([args.seed, seed])
        params = PdoParams(mu0=float(rng.uniform(0.0, args.mu_max)),
                           kappa0=args.kappa0, xi=xi, seed=seed,
                           max_outer=args.max_outer)
        result = pdo_solve(cmdp, params, eps=args.eps, max_sweeps=args.max_sweeps)
        return result.trace.cumulative_inner_iterations

    rows = []
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for xi in xis:
            futures = [pool.submit(one_run, xi, s) for s in range(n_seeds)]
            totals = [f.result() for f in futures]  # deterministic order
            rows.append((xi, float(np.mean(totals)), n_seeds))
    fileio.write_csv(os.path.join(out, "pdo_sweep.csv"),
                     ("xi", "mean_cumulative_inner_iterations", "n_seeds"), rows)


def cmd_bench(args):
    cmdp, _ = _load_model(args)
    out = _outdir(args.out)
    if args.suite == "bs-compare":
        _bench_bs_compare(cmdp, args, out)
    else:
        _bench_pdo_sweep(cmdp, args, out)
    print(f"suite {args.suite} written to {out}")
    return EXIT_OK


def cmd_rollout(args):
    cmdp, model = _load_model(args)
    out = _outdir(args.out)
    if args.policy_from_solve:
        try:
            with open(os.path.join(args.policy_from_solve, "policy.json")) as handle:
                doc = json.load(handle)
            policy = Policy(np.asarray(doc["actions"], dtype=np.int64))
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
            raise ProblemFormatError(f"cannot load policy: {exc}") from exc
    else:
        result = solve_dispatch(cmdp, "gas", mu_max=args.mu_max, eps=args.eps,
                                eps_prime=args.eps_prime,
                                max_sweeps=args.max_sweeps)
        policy = Policy(result.policy)
    stats = rollout(cmdp, policy, n_episodes=args.episodes,
                    horizon=args.horizon, seed=args.seed,
                    success=_success_predicate(model))
    fileio.write_json(os.path.join(out, "rollout.json"), {
        "n_episodes": stats.n_episodes,
        "horizon": stats.horizon,
        "seed": stats.seed,
        "success_count": stats.success_count,
        "success_rate": stats.success_rate,
        "mean_disc_reward": stats.mean_disc_reward,
        "mean_disc_cost": stats.mean_disc_cost,
        "stderr_disc_reward": stats.stderr_disc_reward,
        "stderr_disc_cost": stats.stderr_disc_cost,
    })
    path = sample_path(cmdp, policy, horizon=args.horizon, seed=args.seed)
    if model is not None and hasattr(model, "state_to_cell"):
        rows = [model.state_to_cell(s) for s in path if s != model.terminal_state]
        fileio.write_csv(os.path.join(out, "path.csv"), ("column", "row"), rows)
    else:
        fileio.write_csv(os.path.join(out, "path.csv"), ("state",),
                         [(s,) for s in path])
    print(f"success_rate={stats.success_rate!r} "
          f"mean_disc_cost={stats.mean_disc_cost!r}")
    return EXIT_OK


def cmd_build_env(args):
    if args.env is None:
        raise ProblemFormatError("--env is required for build-env")
    cmdp, _ = _load_model(args)
    fileio.save_problem(cmdp, args.out)
    print(f"wrote {args.out} ({cmdp.n_states} states, {cmdp.n_actions} actions)")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cmdp-gas",
        description="Constrained-MDP solvers: gradient-aware search over the "
                    "Lagrangian dual, plus binary-search and primal-dual baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        _add_problem_args(p)
        p.add_argument("--eps", type=float, default=DEFAULT_EPS,
                       help="inner value-iteration tolerance")
        p.add_argument("--max-sweeps", type=int, default=DEFAULT_MAX_SWEEPS)
        p.add_argument("--out", default=out_default, help="output directory")

    p = sub.add_parser("solve", help="search for the optimal multiplier")
    common(p, "solve-out")
    p.add_argument("--algo", choices=("gas", "bs", "pdo"), default="gas")
    p.add_argument("--mu-max", type=float, default=DEFAULT_MU_MAX)
    p.add_argument("--eps-prime", type=float, default=DEFAULT_EPS)
    p.add_argument("--mu0", type=float, default=0.0, help="pdo initial multiplier")
    p.add_argument("--kappa0", type=float, default=1.0, help="pdo initial step")
    p.add_argument("--xi", type=float, default=0.1, help="pdo decay parameter")
    p.add_argument("--seed", type=int, default=0, help="pdo seed")
    p.add_argument("--max-outer", type=int, default=1000)
    p.add_argument("--no-timing", action="store_true",
                   help="zero the wall-time column for byte-stable output")
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("scan", help="dual objective on a multiplier grid")
    common(p, "scan-out")
    p.add_argument("--mu-min", type=float, default=0.0)
    p.add_argument("--mu-max", type=float, default=DEFAULT_MU_MAX)
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(run=cmd_scan)

    p = sub.add_parser("bench", help="comparison suites")
    common(p, "bench-out")
    p.add_argument("--suite", choices=("bs-compare", "pdo-sweep"), required=True)
    p.add_argument("--eps-prime-grid", default=DEFAULT_EPS_PRIME_GRID)
    p.add_argument("--mu-max-grid", default=DEFAULT_MU_MAX_GRID)
    p.add_argument("--xi-grid", default=DEFAULT_XI_GRID)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="sweep master seed")
    p.add_argument("--mu-max", type=float, default=DEFAULT_MU_MAX,
                   help="range for random pdo initial multipliers")
    p.add_argument("--kappa0", type=float, default=1.0)
    p.add_argument("--max-outer", type=int, default=1000)
    p.set_defaults(run=cmd_bench)

    p = sub.add_parser("rollout", help="Monte Carlo policy evaluation")
    common(p, "rollout-out")
    p.add_argument("--policy-from-solve",
                   help="directory holding policy.json from a prior solve")
    p.add_argument("--mu-max", type=float, default=DEFAULT_MU_MAX)
    p.add_argument("--eps-prime", type=float, default=DEFAULT_EPS)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_rollout)

    p = sub.add_parser("build-env", help="emit an environment as a problem file")
    _add_problem_args(p)
    p.add_argument("--out", default="problem.json", help="output problem file")
    p.set_defaults(run=cmd_build_env)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except InfeasibleOrMTooSmallError as exc:
        print(f"InfeasibleOrMTooSmallError: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (StagnationError, DivergenceError, ConvexityError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAGNATION
    except (ProblemFormatError, InvalidCmdpError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CmdpError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
