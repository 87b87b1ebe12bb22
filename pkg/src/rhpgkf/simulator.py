"""Seeded Gaussian trajectory generation and empirical cost evaluation.

All randomness flows through numpy Generators backed by the Philox
counter-based engine (normals via numpy's ziggurat), so a (seed, stream
key) pair fully determines every draw.  Concurrent rollouts must be
given disjoint substreams by the caller; everything here is stateless
given its Generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError
from .landscape import FilterPolicy
from .model import LinearGaussianSystem, psd_factor

BLOWUP_LIMIT = 1e12


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Generator deterministically derived from (seed, key)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A simulated run: states x_0..x_T, measurements y_0..y_{T-1}.

    estimates, when present, hold xhat_0..xhat_T.  truncated_at records
    the step at which a filter blow-up stopped the run, if any.
    """

    states: np.ndarray
    measurements: np.ndarray
    estimates: np.ndarray | None = None
    seed: int | None = None
    t0: int = 0
    truncated_at: int | None = None

    def __post_init__(self):
        if self.states.shape[0] != self.measurements.shape[0] + 1:
            raise DimensionError("need one more state than measurements")
        if self.estimates is not None and self.estimates.shape != self.states.shape:
            raise DimensionError("estimates must align with states")

    @property
    def steps(self) -> int:
        return self.measurements.shape[0]

    def error_norms(self) -> np.ndarray:
        """Per-step ||x_t - xhat_t||_2; requires estimates."""
        if self.estimates is None:
            raise ValueError("trajectory has no estimates")
        return np.linalg.norm(self.states - self.estimates, axis=1)


class _Factors:
    """Cached psd factors of the system covariances."""

    def __init__(self, sys: LinearGaussianSystem):
        self.x0 = psd_factor(sys.x0_cov, "x0_cov")
        self.w = psd_factor(sys.w, "w")
        self.v = psd_factor(sys.v, "v")
        self.theta = psd_factor(sys.theta_cov, "theta_cov")


def _draw(rng: np.random.Generator, factor: np.ndarray, batch: int) -> np.ndarray:
    return rng.standard_normal((batch, factor.shape[1])) @ factor.T


def sample_trajectory(
    sys: LinearGaussianSystem, steps: int, rng: np.random.Generator
) -> Trajectory:
    """Simulate the plant for `steps` transitions from a random x_0."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    f = _Factors(sys)
    n, m = sys.n, sys.m
    states = np.empty((steps + 1, n))
    measurements = np.empty((steps, m))
    x = sys.x0_mean + _draw(rng, f.x0, 1)[0]
    states[0] = x
    for t in range(steps):
        measurements[t] = sys.c @ x + _draw(rng, f.v, 1)[0]
        x = sys.a @ x + _draw(rng, f.w, 1)[0]
        states[t + 1] = x
    return Trajectory(states=states, measurements=measurements)


def injected_rollout_batch(
    sys: LinearGaussianSystem,
    policies: Sequence[FilterPolicy],
    h: int,
    rng: np.random.Generator,
    batch: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batch of independent rollouts through step h with shared injection.

    Runs plant and filter under the fixed prior blocks, adds one shared
    draw theta ~ N(0, Theta) to both x_h and xhat_h (at h = 0 the
    injection enters x_0 and xhat_0), then produces x_{h+1} and y_h.
    Returns (x_h, xhat_h, x_{h+1}, y_h) with a leading batch axis.
    Draw order is fixed: x_0, then (v_t, w_t) per prior step, theta,
    v_h, w_h.
    """
    if h < 0:
        raise ValueError("h must be >= 0")
    if len(policies) < h:
        raise DimensionError(f"need {h} prior policies, got {len(policies)}")
    f = _Factors(sys)
    a, c = sys.a, sys.c
    x = sys.x0_mean + _draw(rng, f.x0, batch)
    xhat = np.broadcast_to(sys.x0_mean, (batch, sys.n)).copy()
    for t in range(h):
        y = x @ c.T + _draw(rng, f.v, batch)
        w = _draw(rng, f.w, batch)
        pi = policies[t]
        xhat = xhat @ pi.a_l.T + y @ pi.b_l.T
        x = x @ a.T + w
    theta = _draw(rng, f.theta, batch)
    x = x + theta
    xhat = xhat + theta
    y_h = x @ c.T + _draw(rng, f.v, batch)
    x_next = x @ a.T + _draw(rng, f.w, batch)
    return x, xhat, x_next, y_h


def rollout_with_injection(
    sys: LinearGaussianSystem,
    policies: Sequence[FilterPolicy],
    h: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Single rollout through step h with injection; see injected_rollout_batch."""
    x, xhat, x_next, y = injected_rollout_batch(sys, policies, h, rng, 1)
    return x[0], xhat[0], x_next[0], y[0]


def _schedule(policy_schedule, steps: int) -> Sequence[FilterPolicy]:
    if isinstance(policy_schedule, FilterPolicy):
        return [policy_schedule] * steps
    if len(policy_schedule) < steps:
        raise DimensionError(
            f"schedule has {len(policy_schedule)} blocks, need {steps}"
        )
    return policy_schedule


def run_filter(
    sys: LinearGaussianSystem,
    policy_schedule,
    steps: int,
    rng: np.random.Generator,
    xhat0: np.ndarray | None = None,
) -> Trajectory:
    """Simulate the plant and run a filter along it.

    policy_schedule is a single block (time-invariant) or a sequence of
    length >= steps.  xhat0 defaults to the prior mean.  If the estimate
    error norm exceeds 1e12 the run is truncated at that step and the
    trajectory is flagged.
    """
    schedule = _schedule(policy_schedule, steps)
    traj = sample_trajectory(sys, steps, rng)
    n = sys.n
    estimates = np.zeros((steps + 1, n))
    estimates[0] = sys.x0_mean if xhat0 is None else np.asarray(xhat0, dtype=float)
    truncated_at = None
    for t in range(steps):
        pi = schedule[t]
        estimates[t + 1] = pi.a_l @ estimates[t] + pi.b_l @ traj.measurements[t]
        if np.linalg.norm(traj.states[t + 1] - estimates[t + 1]) > BLOWUP_LIMIT:
            truncated_at = t + 1
            estimates = estimates[: t + 2]
            return Trajectory(
                states=traj.states[: t + 2],
                measurements=traj.measurements[: t + 1],
                estimates=estimates,
                truncated_at=truncated_at,
            )
    return Trajectory(
        states=traj.states,
        measurements=traj.measurements,
        estimates=estimates,
        truncated_at=truncated_at,
    )


def empirical_cost(
    sys: LinearGaussianSystem,
    policies: Sequence[FilterPolicy],
    candidate: FilterPolicy,
    h: int,
    rollouts: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the step-h subproblem cost.

    Averages sum_{t=0}^{h+1} ||x_t - xhat_t||^2 over independent
    injected rollouts; returns (mean, standard error).
    """
    if rollouts < 1:
        raise ValueError("rollouts must be >= 1")
    candidate.check_dims(sys)
    if len(policies) < h:
        raise DimensionError(f"need {h} prior policies, got {len(policies)}")
    f = _Factors(sys)
    a, c = sys.a, sys.c
    batch = rollouts
    x = sys.x0_mean + _draw(rng, f.x0, batch)
    xhat = np.broadcast_to(sys.x0_mean, (batch, sys.n)).copy()
    total = np.einsum("bi,bi->b", x - xhat, x - xhat)
    for t in range(h):
        y = x @ c.T + _draw(rng, f.v, batch)
        pi = policies[t]
        xhat = xhat @ pi.a_l.T + y @ pi.b_l.T
        x = x @ a.T + _draw(rng, f.w, batch)
        total += np.einsum("bi,bi->b", x - xhat, x - xhat)
    theta = _draw(rng, f.theta, batch)
    x = x + theta
    xhat = xhat + theta
    y = x @ c.T + _draw(rng, f.v, batch)
    x_next = x @ a.T + _draw(rng, f.w, batch)
    xhat_next = xhat @ candidate.a_l.T + y @ candidate.b_l.T
    total += np.einsum("bi,bi->b", x_next - xhat_next, x_next - xhat_next)
    mean = float(total.mean())
    stderr = float(total.std(ddof=1) / np.sqrt(batch)) if batch > 1 else 0.0
    return mean, stderr
