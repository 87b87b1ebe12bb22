"""Receding-horizon policy search for the optimal linear filter.

The outer loop grows the problem horizon one step at a time.  Each step
solves a strongly convex static estimation subproblem for the newest
filter block, warm-starting from the previous one: either with exact
gradients and a matrix-form Adam rule, or model-free with a two-point
zeroth-order gradient oracle driven by simulated rollouts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DefinitenessError, DimensionError, DivergenceError
from .landscape import (
    FilterPolicy,
    advance_moments,
    gradient_kernel,
    initial_moments,
    _error_trace,
    _terminal_cost,
)
from .model import LinearGaussianSystem
from .simulator import injected_rollout_batch, substream

POLICY_LIMIT = 1e12


@dataclass(frozen=True)
class AdamParams:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0.0:
            raise ValueError("lr must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.eps_hat <= 0.0:
            raise ValueError("eps_hat must be positive")


@dataclass(frozen=True)
class ZOParams:
    """Zeroth-order schedule; defaults are pilot-tuned, not derived."""

    radius: float = 1e-2
    stepsize: float = 1e-3
    inner_iters: int = 20_000
    minibatch: int = 32
    track_best: bool = False

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if self.stepsize < 0.0:
            raise ValueError("stepsize must be nonnegative")
        if self.inner_iters < 1 or self.minibatch < 1:
            raise ValueError("inner_iters and minibatch must be >= 1")


@dataclass(frozen=True)
class RHPGConfig:
    horizon: int
    mode: str = "first_order"
    grad_tol: float = 1e-4
    adam: AdamParams = field(default_factory=AdamParams)
    zo: ZOParams = field(default_factory=ZOParams)
    max_inner_iters: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.mode not in ("first_order", "zeroth_order"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")


@dataclass
class RHPGTrace:
    """Per-outer-step record of the run."""

    h: list[int] = field(default_factory=list)
    inner_iters: list[int] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    cost: list[float] = field(default_factory=list)
    elapsed_ms: list[float] = field(default_factory=list)
    policies: list[FilterPolicy] = field(default_factory=list)
    capped: list[bool] = field(default_factory=list)

    def append(self, h, iters, gnorm, cost, elapsed, policy, capped):
        self.h.append(int(h))
        self.inner_iters.append(int(iters))
        self.grad_norm.append(float(gnorm))
        self.cost.append(float(cost))
        self.elapsed_ms.append(float(elapsed))
        self.policies.append(policy)
        self.capped.append(bool(capped))

    def __len__(self) -> int:
        return len(self.h)


def adam_step(
    p: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    i: int,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps_hat: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Matrix-form Adam update.

    m' = b1 m + (1-b1) grad, v' = b2 v + (1-b2) grad^T grad, both bias
    corrected with exponent i >= 1, and
    p' = p - lr * mhat (vhat^{1/2} + eps I)^{-1}
    with the symmetric psd square root of vhat.
    """
    if i < 1:
        raise ValueError("step index i must be >= 1 (bias correction)")
    if p.shape != grad.shape or p.shape != m.shape:
        raise DimensionError("p, grad, m must share a shape")
    k = p.shape[1]
    if v.shape != (k, k):
        raise DimensionError(f"v must be {k} x {k}, got {v.shape}")
    m_new = beta1 * m + (1.0 - beta1) * grad
    v_new = beta2 * v + (1.0 - beta2) * (grad.T @ grad)
    m_hat = m_new / (1.0 - beta1**i)
    v_hat = v_new / (1.0 - beta2**i)
    eigs, basis = np.linalg.eigh(0.5 * (v_hat + v_hat.T))
    if eigs.min() < -1e-12 * max(1.0, float(eigs.max(initial=0.0))):
        raise DefinitenessError("second-moment accumulator lost positive semidefiniteness")
    inv = basis @ np.diag(1.0 / (np.sqrt(np.clip(eigs, 0.0, None)) + eps_hat)) @ basis.T
    p_new = p - lr * m_hat @ inv
    return p_new, m_new, v_new


def policy_distance(p: FilterPolicy, q: FilterPolicy) -> float:
    """Spectral norm of the stacked block difference."""
    if p.a_l.shape != q.a_l.shape or p.b_l.shape != q.b_l.shape:
        raise DimensionError("policies have mismatched shapes")
    return float(np.linalg.norm(p.stacked - q.stacked, 2))


def _check_learnable(sys: LinearGaussianSystem) -> None:
    if not np.any(sys.x0_mean):
        raise ValueError("x0_mean must be nonzero for receding-horizon learning")
    if np.linalg.eigvalsh(sys.theta_cov).min() <= 0.0:
        raise DefinitenessError(
            "theta_cov must be positive definite for receding-horizon learning"
        )


def _guard_policy(pi: np.ndarray, h: int) -> None:
    if not np.isfinite(pi).all() or np.abs(pi).max() > POLICY_LIMIT:
        raise DivergenceError(f"policy diverged at outer step {h}")


def rhpg_first_order(
    sys: LinearGaussianSystem, cfg: RHPGConfig
) -> tuple[FilterPolicy, RHPGTrace]:
    """Outer loop with exact gradients and Adam inner updates.

    Starts from the zero block, assembles the subproblem kernels from
    the moments induced by the already-learned blocks, runs Adam until
    the gradient norm drops below grad_tol (or the safety cap), then
    warm-starts the next step with the convergent block.  Returns the
    final block and the trace.
    """
    if cfg.mode != "first_order":
        raise ValueError("config mode must be 'first_order'")
    _check_learnable(sys)
    n, m = sys.n, sys.m
    trace = RHPGTrace()
    pi = np.zeros((n, n + m))
    state = initial_moments(sys)
    running = _error_trace(state)
    ad = cfg.adam
    try:
        _first_order_loop(sys, cfg, trace, pi, state, running, ad)
    except DivergenceError as exc:
        exc.trace = trace
        raise
    return trace.policies[-1], trace


def _first_order_loop(sys, cfg, trace, pi, state, running, ad):
    for h in range(cfg.horizon):
        start = time.perf_counter()
        kernel = gradient_kernel(sys, state)
        psi_total, g_total = kernel.psi_total, kernel.g_total
        width = pi.shape[1]
        m_acc = np.zeros_like(pi)
        v_acc = np.zeros((width, width))
        iters = 0
        capped = False
        while True:
            grad = 2.0 * (pi @ psi_total - g_total)
            gnorm = float(np.linalg.norm(grad))
            if gnorm < cfg.grad_tol:
                break
            if iters >= cfg.max_inner_iters:
                capped = True
                break
            pi, m_acc, v_acc = adam_step(
                pi, grad, m_acc, v_acc, ad.lr, iters + 1, ad.beta1, ad.beta2, ad.eps_hat
            )
            iters += 1
            _guard_policy(pi, h)
        policy = FilterPolicy.from_stacked(pi)
        cost = running + _terminal_cost(sys, kernel, state, pi)
        elapsed = (time.perf_counter() - start) * 1e3
        trace.append(h, iters, gnorm, cost, elapsed, policy, capped)
        if h + 1 < cfg.horizon:
            state = advance_moments(sys, state, policy)
            running += _error_trace(state)


def estimate_from_rollout(
    policy: FilterPolicy,
    radius: float,
    direction: np.ndarray,
    rollout: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
) -> np.ndarray:
    """Two-point gradient estimate from one injected rollout.

    Evaluates the terminal-step cost at pi +/- radius * direction on the
    same rollout and scales the difference by n(n+m) / (2 radius); terms
    before the terminal step are identical at both probes and cancel.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    _, xhat, x_next, y = rollout
    pi = policy.stacked
    n, width = pi.shape
    z = np.concatenate([xhat, y])
    base = x_next - pi @ z
    pert = radius * (direction @ z)
    j_plus = float(np.dot(base - pert, base - pert))
    j_minus = float(np.dot(base + pert, base + pert))
    scale = n * width / (2.0 * radius)
    return scale * (j_plus - j_minus) * direction


def _unit_directions(rng: np.random.Generator, batch: int, n: int, width: int) -> np.ndarray:
    u = rng.standard_normal((batch, n, width))
    norms = np.linalg.norm(u.reshape(batch, -1), axis=1)
    return u / norms[:, None, None]


def two_point_gradient_estimate(
    sys: LinearGaussianSystem,
    policies,
    h: int,
    policy: FilterPolicy,
    radius: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Single two-point zeroth-order gradient estimate at the given block."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    policy.check_dims(sys)
    direction = _unit_directions(rng, 1, sys.n, sys.n + sys.m)[0]
    rollout = injected_rollout_batch(sys, policies, h, rng, 1)
    single = tuple(arr[0] for arr in rollout)
    return estimate_from_rollout(policy, radius, direction, single)


def _batched_estimate(
    sys: LinearGaussianSystem,
    policies,
    h: int,
    pi: np.ndarray,
    radius: float,
    rng: np.random.Generator,
    batch: int,
) -> np.ndarray:
    """Mean of `batch` two-point estimates, one fresh rollout each."""
    n, width = pi.shape
    u = _unit_directions(rng, batch, n, width)
    _, xhat, x_next, y = injected_rollout_batch(sys, policies, h, rng, batch)
    z = np.hstack([xhat, y])
    base = x_next - z @ pi.T
    pert = radius * np.einsum("bij,bj->bi", u, z)
    j_plus = np.einsum("bi,bi->b", base - pert, base - pert)
    j_minus = np.einsum("bi,bi->b", base + pert, base + pert)
    scale = n * width / (2.0 * radius)
    return scale * np.einsum("b,bij->ij", j_plus - j_minus, u) / batch


def rhpg_zeroth_order(
    sys: LinearGaussianSystem, cfg: RHPGConfig
) -> tuple[FilterPolicy, RHPGTrace]:
    """Outer loop with simulated-rollout two-point gradient estimates.

    Each outer step runs a fixed budget of minibatch updates
    pi <- pi - stepsize * mean-estimate, fully seeded: iteration k of
    step h draws from the substream keyed by (seed, h, k).  Returns the
    last iterate per step, or the iterate of lowest closed-form cost
    when track_best is set.
    """
    if cfg.mode != "zeroth_order":
        raise ValueError("config mode must be 'zeroth_order'")
    _check_learnable(sys)
    n, m = sys.n, sys.m
    zo = cfg.zo
    trace = RHPGTrace()
    pi = np.zeros((n, n + m))
    state = initial_moments(sys)
    running = _error_trace(state)
    try:
        _zeroth_order_loop(sys, cfg, zo, trace, pi, state, running)
    except DivergenceError as exc:
        exc.trace = trace
        raise
    return trace.policies[-1], trace


def _zeroth_order_loop(sys, cfg, zo, trace, pi, state, running):
    priors: list[FilterPolicy] = []
    for h in range(cfg.horizon):
        start = time.perf_counter()
        kernel = gradient_kernel(sys, state)
        best_pi = pi.copy()
        best_cost = running + _terminal_cost(sys, kernel, state, pi)
        est = np.zeros_like(pi)
        for k in range(zo.inner_iters):
            rng = substream(cfg.seed, h, k)
            est = _batched_estimate(sys, priors, h, pi, zo.radius, rng, zo.minibatch)
            pi = pi - zo.stepsize * est
            _guard_policy(pi, h)
            if zo.track_best:
                cost_now = running + _terminal_cost(sys, kernel, state, pi)
                if cost_now < best_cost:
                    best_cost = cost_now
                    best_pi = pi.copy()
        if zo.track_best:
            pi = best_pi
        policy = FilterPolicy.from_stacked(pi)
        cost = running + _terminal_cost(sys, kernel, state, pi)
        elapsed = (time.perf_counter() - start) * 1e3
        trace.append(h, zo.inner_iters, float(np.linalg.norm(est)), cost, elapsed, policy, False)
        priors.append(policy)
        if h + 1 < cfg.horizon:
            state = advance_moments(sys, state, policy)
            running += _error_trace(state)
