"""JSON and CSV persistence for every documented file format.

JSON for structured objects, CSV for time series.  Matrices are written
as row-major nested arrays of doubles.  Floats are serialized through
Python's shortest round-trip repr, so identical values always produce
identical bytes.
"""

from __future__ import annotations

import gzip
import io
import json
from typing import Sequence

import numpy as np

from .benchmark import CDParams
from .landscape import FilterPolicy
from .model import LinearGaussianSystem, RiccatiSolution
from .rhpg import RHPGTrace
from .simulator import Trajectory


def _mat(x: np.ndarray) -> list:
    return np.asarray(x, dtype=float).tolist()


def save_system(sys: LinearGaussianSystem, path: str) -> None:
    payload = {
        "a": _mat(sys.a),
        "c": _mat(sys.c),
        "w": _mat(sys.w),
        "v": _mat(sys.v),
        "x0_mean": _mat(sys.x0_mean),
        "x0_cov": _mat(sys.x0_cov),
        "theta_cov": _mat(sys.theta_cov),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_system(path: str) -> LinearGaussianSystem:
    with open(path) as fh:
        d = json.load(fh)
    return LinearGaussianSystem(
        a=np.array(d["a"], dtype=float),
        c=np.array(d["c"], dtype=float),
        w=np.array(d["w"], dtype=float),
        v=np.array(d["v"], dtype=float),
        x0_mean=np.array(d["x0_mean"], dtype=float),
        x0_cov=np.array(d["x0_cov"], dtype=float),
        theta_cov=np.array(d["theta_cov"], dtype=float),
    )


def save_riccati(sol: RiccatiSolution, path: str) -> None:
    payload = {
        "sigma": _mat(sol.sigma),
        "gain": _mat(sol.gain),
        "closed_loop": _mat(sol.closed_loop),
        "residual": float(sol.residual),
        "iterations": int(sol.iterations),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_riccati(path: str) -> RiccatiSolution:
    with open(path) as fh:
        d = json.load(fh)
    return RiccatiSolution(
        sigma=np.array(d["sigma"], dtype=float),
        gain=np.array(d["gain"], dtype=float),
        closed_loop=np.array(d["closed_loop"], dtype=float),
        residual=float(d["residual"]),
        iterations=int(d["iterations"]),
    )


def save_policy(policy: FilterPolicy, path: str) -> None:
    with open(path, "w") as fh:
        json.dump({"a_l": _mat(policy.a_l), "b_l": _mat(policy.b_l)}, fh, indent=2)
        fh.write("\n")


def load_policy(path: str) -> FilterPolicy:
    with open(path) as fh:
        d = json.load(fh)
    return FilterPolicy(
        a_l=np.array(d["a_l"], dtype=float), b_l=np.array(d["b_l"], dtype=float)
    )


def save_policy_schedule(policies: Sequence[FilterPolicy], path: str) -> None:
    payload = [
        {"t": t, "a_l": _mat(p.a_l), "b_l": _mat(p.b_l)} for t, p in enumerate(policies)
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_policy_schedule(path: str) -> list[FilterPolicy]:
    with open(path) as fh:
        items = json.load(fh)
    items = sorted(items, key=lambda d: int(d["t"]))
    return [
        FilterPolicy(a_l=np.array(d["a_l"], dtype=float), b_l=np.array(d["b_l"], dtype=float))
        for d in items
    ]


def save_gains(gains: Sequence[tuple[np.ndarray, np.ndarray]], path: str) -> None:
    payload = [
        {"t": t, "gain": _mat(g), "sigma": _mat(s)} for t, (g, s) in enumerate(gains)
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def save_cd_params(params: CDParams, path: str) -> None:
    payload = {
        "n": params.n,
        "m": params.m,
        "nu": params.nu,
        "vel": params.vel,
        "dt": params.dt,
        "v_scale": params.v_scale,
        "w_scale": params.w_scale,
        "theta_scale": params.theta_scale,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def save_trace_csv(trace: RHPGTrace, path: str, include_timing: bool = False) -> None:
    """Write the per-step trace.

    elapsed_ms is zeroed unless include_timing is set, keeping default
    output files byte-identical across replays with the same seed.
    """
    with open(path, "w") as fh:
        fh.write("h,inner_iters,grad_norm,cost,elapsed_ms\n")
        for i in range(len(trace)):
            elapsed = trace.elapsed_ms[i] if include_timing else 0.0
            fh.write(
                f"{trace.h[i]},{trace.inner_iters[i]},{trace.grad_norm[i]!r},"
                f"{trace.cost[i]!r},{elapsed!r}\n"
            )


def save_errors_csv(
    mean_errors: np.ndarray, path: str, detail: np.ndarray | None = None
) -> None:
    """Per-timestep mean error norms, optionally with per-trajectory columns."""
    mean_errors = np.asarray(mean_errors, dtype=float)
    header = "t,mean_err_norm"
    if detail is not None:
        detail = np.asarray(detail, dtype=float)
        if detail.shape[1] != mean_errors.shape[0]:
            raise ValueError("detail must have one column per timestep")
        header += "," + ",".join(f"err_{i}" for i in range(detail.shape[0]))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for t, value in enumerate(mean_errors):
            row = f"{t},{float(value)!r}"
            if detail is not None:
                row += "," + ",".join(repr(float(v)) for v in detail[:, t])
            fh.write(row + "\n")


def save_trajectory_csv(traj: Trajectory, path: str) -> None:
    """One row per step: t, state entries, estimate entries, error norm.

    Estimate columns appear only when the trajectory carries estimates.
    A path ending in .gz is gzip-compressed with a pinned zero mtime so
    identical content always yields identical bytes.
    """
    n = traj.states.shape[1]
    cols = ["t"] + [f"x_{i}" for i in range(n)]
    if traj.estimates is not None:
        cols += [f"xhat_{i}" for i in range(n)] + ["err_norm"]
        errs = traj.error_norms()
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for t in range(traj.states.shape[0]):
        row = [str(t)] + [repr(float(v)) for v in traj.states[t]]
        if traj.estimates is not None:
            row += [repr(float(v)) for v in traj.estimates[t]]
            row.append(repr(float(errs[t])))
        buf.write(",".join(row) + "\n")
    data = buf.getvalue().encode()
    if path.endswith(".gz"):
        with open(path, "wb") as raw:
            with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as gz:
                gz.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)
