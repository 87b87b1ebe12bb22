"""Command-line harness.

Subcommands: benchmark-cd (build the convection-diffusion plant), fare
(steady-state filter solve), rhpg (run the learner), evaluate (filter
error curves over simulated trajectories), gains (time-varying gain
dump).  Exit codes: 0 ok, 2 usage or bad input, 3 solver
non-convergence, 4 optimizer divergence.  Every command is
deterministic given its flags and seed; set RHPG_LOG=debug for verbose
progress on stderr.
"""

from __future__ import annotations

import argparse
import os
import sys as _sys
import time

import numpy as np

from . import fileio
from .benchmark import CDParams, build_cd_system
from .errors import ConvergenceError, DivergenceError
from .landscape import FilterPolicy
from .model import horizon_bound, solve_fare, spectral_radius, time_varying_gains
from .rhpg import AdamParams, RHPGConfig, ZOParams, rhpg_first_order, rhpg_zeroth_order
from .simulator import run_filter, substream


def _debug_enabled() -> bool:
    return os.environ.get("RHPG_LOG", "").lower() == "debug"


def _debug(msg: str) -> None:
    if _debug_enabled():
        print(msg, file=_sys.stderr)


def _require_file(path: str, parser: argparse.ArgumentParser) -> None:
    if not os.path.exists(path):
        parser.error(f"file not found: {path}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rhpgkf",
        description="Learn linear state estimators from simulated rollouts "
        "and verify them against model-based oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser(
        "benchmark-cd",
        help="build the convection-diffusion benchmark system",
        description="Write a convection-diffusion plant as a system JSON "
        "file plus a parameter sidecar. Defaults reproduce the full-scale "
        "experiment configuration (n=200, 5 sensors).",
    )
    bench.add_argument("--n", type=int, default=200, help="state dimension, even (default 200)")
    bench.add_argument("--sensors", type=int, default=5, help="sensor count (default 5)")
    bench.add_argument("--nu", type=float, default=2e-3, help="diffusion coefficient (default 2e-3)")
    bench.add_argument("--vel", type=float, default=5e-2, help="convection velocity (default 5e-2)")
    bench.add_argument("--dt", type=float, default=0.05, help="time step (default 0.05)")
    bench.add_argument("--v-scale", type=float, default=1e-1, help="measurement-noise variance (default 1e-1)")
    bench.add_argument("--w-scale", type=float, default=1e-9, help="process-noise variance (default 1e-9)")
    bench.add_argument("--theta-scale", type=float, default=1e-2, help="injection variance (default 1e-2)")
    bench.add_argument("--out", required=True, help="output system JSON path")
    bench.add_argument("--params-out", default=None, help="sidecar parameter JSON (default <out>.params.json)")

    fare = sub.add_parser(
        "fare",
        help="solve the steady-state filter Riccati equation",
        description="Iterate the forward Riccati step to its fixed point and "
        "write the solution JSON; prints the residual and the closed-loop "
        "spectral radius.",
    )
    fare.add_argument("--system", required=True, help="system JSON path")
    fare.add_argument("--tol", type=float, default=1e-12, help="relative-change stop tolerance (default 1e-12)")
    fare.add_argument("--max-iter", type=int, default=1_000_000, help="iteration cap (default 1e6)")
    fare.add_argument("--out", required=True, help="output solution JSON path")

    rh = sub.add_parser(
        "rhpg",
        help="run the receding-horizon policy-gradient learner",
        description="Learn a filter block by receding-horizon policy "
        "gradient and write the final policy JSON plus a per-step trace CSV.",
    )
    rh.add_argument("--system", required=True, help="system JSON path")
    rh.add_argument(
        "--mode",
        choices=["first-order", "zeroth-order"],
        default="first-order",
        help="inner solver (default first-order)",
    )
    rh.add_argument("--horizon", type=int, default=None, help="outer horizon N")
    rh.add_argument(
        "--auto-horizon",
        action="store_true",
        help="pick N from the model-based horizon bound (requires --eps)",
    )
    rh.add_argument("--eps", type=float, default=None, help="target gain distance for --auto-horizon")
    rh.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    rh.add_argument("--grad-tol", type=float, default=1e-4, help="first-order stop tolerance (default 1e-4)")
    rh.add_argument("--lr", type=float, default=1e-3, help="Adam step size (default 1e-3)")
    rh.add_argument("--max-inner-iters", type=int, default=100_000, help="inner-iteration safety cap (default 1e5)")
    rh.add_argument("--radius", type=float, default=1e-2, help="zeroth-order smoothing radius (default 1e-2)")
    rh.add_argument("--stepsize", type=float, default=1e-3, help="zeroth-order step size (default 1e-3)")
    rh.add_argument("--inner-iters", type=int, default=20_000, help="zeroth-order updates per outer step (default 2e4)")
    rh.add_argument("--minibatch", type=int, default=32, help="two-point estimates per update (default 32)")
    rh.add_argument("--out", required=True, help="output policy JSON path")
    rh.add_argument("--trace", required=True, help="output trace CSV path")
    rh.add_argument(
        "--timing",
        action="store_true",
        help="record wall time in the trace CSV (breaks byte-for-byte replay)",
    )

    ev = sub.add_parser(
        "evaluate",
        help="run a filter over simulated trajectories and export error curves",
        description="Average per-step estimation error norms of a policy "
        "(or the model-based steady-state filter with --policy kf) over "
        "freshly simulated trajectories.",
    )
    ev.add_argument("--system", required=True, help="system JSON path")
    ev.add_argument("--policy", required=True, help="policy JSON path, or 'kf' for the model-based filter")
    ev.add_argument("--trajectories", type=int, default=100, help="number of trajectories (default 100)")
    ev.add_argument("--steps", type=int, default=700, help="steps per trajectory (default 700)")
    ev.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    ev.add_argument("--out", required=True, help="output errors CSV path")
    ev.add_argument("--detail", action="store_true", help="add one error column per trajectory")
    ev.add_argument(
        "--xhat0-mode",
        choices=["mean"],
        default="mean",
        help="initial estimate (the prior mean; default mean)",
    )
    ev.add_argument(
        "--trajectory-out",
        default=None,
        help="also export the first trajectory with estimates as CSV (.gz supported)",
    )

    gains = sub.add_parser(
        "gains",
        help="dump the model-based time-varying gain sequence",
        description="Forward-iterate the Riccati recursion and write the "
        "per-step gains and error covariances as JSON.",
    )
    gains.add_argument("--system", required=True, help="system JSON path")
    gains.add_argument("--horizon", type=int, required=True, help="number of steps")
    gains.add_argument("--out", required=True, help="output JSON path")
    return parser


def _cmd_benchmark(args) -> int:
    params = CDParams(
        n=args.n,
        m=args.sensors,
        nu=args.nu,
        vel=args.vel,
        dt=args.dt,
        v_scale=args.v_scale,
        w_scale=args.w_scale,
        theta_scale=args.theta_scale,
    )
    system = build_cd_system(params)
    fileio.save_system(system, args.out)
    sidecar = args.params_out or args.out + ".params.json"
    fileio.save_cd_params(params, sidecar)
    print(f"wrote {args.out} (n={params.n}, sensors={params.m}) and {sidecar}")
    return 0


def _cmd_fare(args, parser) -> int:
    _require_file(args.system, parser)
    system = fileio.load_system(args.system)
    try:
        sol = solve_fare(system, tol=args.tol, max_iter=args.max_iter)
    except ConvergenceError as exc:
        print(f"error: {exc} (iterations={exc.iterations})", file=_sys.stderr)
        return 3
    fileio.save_riccati(sol, args.out)
    print(
        f"residual={sol.residual:.3e} rho={spectral_radius(sol.closed_loop):.12f} "
        f"iterations={sol.iterations}"
    )
    return 0


def _cmd_rhpg(args, parser) -> int:
    _require_file(args.system, parser)
    system = fileio.load_system(args.system)
    if args.auto_horizon:
        if args.eps is None:
            parser.error("--auto-horizon requires --eps")
        horizon = horizon_bound(system, args.eps)
        print(f"auto-selected horizon N={horizon}", file=_sys.stderr)
    elif args.horizon is not None:
        horizon = args.horizon
    else:
        parser.error("provide --horizon or --auto-horizon with --eps")
    mode = args.mode.replace("-", "_")
    cfg = RHPGConfig(
        horizon=horizon,
        mode=mode,
        grad_tol=args.grad_tol,
        adam=AdamParams(lr=args.lr),
        zo=ZOParams(
            radius=args.radius,
            stepsize=args.stepsize,
            inner_iters=args.inner_iters,
            minibatch=args.minibatch,
        ),
        max_inner_iters=args.max_inner_iters,
        seed=args.seed,
    )
    runner = rhpg_first_order if mode == "first_order" else rhpg_zeroth_order
    started = time.perf_counter()
    try:
        policy, trace = runner(system, cfg)
    except DivergenceError as exc:
        partial = getattr(exc, "trace", None)
        if partial is not None:
            fileio.save_trace_csv(partial, args.trace, include_timing=args.timing)
        print(f"error: {exc}", file=_sys.stderr)
        return 4
    wall = time.perf_counter() - started
    fileio.save_policy(policy, args.out)
    fileio.save_trace_csv(trace, args.trace, include_timing=args.timing)
    for i in range(len(trace)):
        _debug(
            f"h={trace.h[i]} inner={trace.inner_iters[i]} "
            f"grad={trace.grad_norm[i]:.3e} cost={trace.cost[i]:.6f}"
        )
    capped = sum(trace.capped)
    if capped:
        print(f"warning: inner cap reached at {capped} outer steps", file=_sys.stderr)
    print(f"wrote {args.out} and {args.trace}", file=_sys.stdout)
    print(f"total wall time {wall:.2f}s", file=_sys.stderr)
    return 0


def _cmd_evaluate(args, parser) -> int:
    _require_file(args.system, parser)
    system = fileio.load_system(args.system)
    if args.policy == "kf":
        sol = solve_fare(system)
        policy = FilterPolicy(a_l=sol.closed_loop, b_l=sol.gain)
    else:
        _require_file(args.policy, parser)
        policy = fileio.load_policy(args.policy)
    steps = args.steps
    curves = np.empty((args.trajectories, steps + 1))
    first = None
    truncated = 0
    for i in range(args.trajectories):
        rng = substream(args.seed, i)
        traj = run_filter(system, policy, steps, rng)
        errs = traj.error_norms()
        if traj.truncated_at is not None:
            truncated += 1
            # hold the last (blown-up) value so curve lengths stay aligned
            errs = np.concatenate([errs, np.full(steps + 1 - errs.shape[0], errs[-1])])
        curves[i] = errs
        if first is None:
            first = traj
    if truncated:
        print(f"warning: {truncated} trajectories flagged unstable", file=_sys.stderr)
    fileio.save_errors_csv(
        curves.mean(axis=0), args.out, detail=curves if args.detail else None
    )
    if args.trajectory_out:
        fileio.save_trajectory_csv(first, args.trajectory_out)
        print(f"wrote {args.out} and {args.trajectory_out}")
    else:
        print(f"wrote {args.out}")
    return 0


def _cmd_gains(args, parser) -> int:
    _require_file(args.system, parser)
    system = fileio.load_system(args.system)
    fileio.save_gains(time_varying_gains(system, args.horizon), args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "benchmark-cd":
            return _cmd_benchmark(args)
        if args.command == "fare":
            return _cmd_fare(args, parser)
        if args.command == "rhpg":
            return _cmd_rhpg(args, parser)
        if args.command == "evaluate":
            return _cmd_evaluate(args, parser)
        if args.command == "gains":
            return _cmd_gains(args, parser)
    except ConvergenceError as exc:
        print(f"error: {exc} (iterations={exc.iterations})", file=_sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
