"""Exact cost, gradient, and curvature of the per-step subproblems.

Each outer iteration of the receding-horizon learner minimizes the
expected squared estimation error accumulated through step h+1 over the
last filter block pi_h = [A_L | B_L], holding earlier blocks fixed.
That objective is an exact quadratic in pi_h.  This module propagates
the uncentered first and second moments of (state, estimate) that the
quadratic is built from, assembles its gradient and Hessian kernels,
and evaluates the cost in closed form with no sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, LandscapeDegeneracyError
from .model import LinearGaussianSystem, symmetrize


@dataclass(frozen=True, eq=False)
class FilterPolicy:
    """One filter block: estimate' = a_l @ estimate + b_l @ measurement."""

    a_l: np.ndarray
    b_l: np.ndarray

    def __post_init__(self):
        a_l = np.asarray(self.a_l, dtype=float)
        b_l = np.asarray(self.b_l, dtype=float)
        if a_l.ndim != 2 or a_l.shape[0] != a_l.shape[1]:
            raise DimensionError(f"a_l must be square, got {a_l.shape}")
        if b_l.ndim != 2 or b_l.shape[0] != a_l.shape[0]:
            raise DimensionError(
                f"b_l must have {a_l.shape[0]} rows, got {b_l.shape}"
            )
        if not (np.isfinite(a_l).all() and np.isfinite(b_l).all()):
            raise ValueError("policy entries must be finite")
        object.__setattr__(self, "a_l", a_l)
        object.__setattr__(self, "b_l", b_l)

    @property
    def stacked(self) -> np.ndarray:
        """The block row [a_l | b_l], shape n x (n+m)."""
        return np.hstack([self.a_l, self.b_l])

    @staticmethod
    def from_stacked(stacked: np.ndarray) -> "FilterPolicy":
        stacked = np.asarray(stacked, dtype=float)
        n = stacked.shape[0]
        if stacked.ndim != 2 or stacked.shape[1] <= n:
            raise DimensionError(f"stacked block must be n x (n+m), got {stacked.shape}")
        return FilterPolicy(a_l=stacked[:, :n].copy(), b_l=stacked[:, n:].copy())

    @staticmethod
    def zero(n: int, m: int) -> "FilterPolicy":
        return FilterPolicy(a_l=np.zeros((n, n)), b_l=np.zeros((n, m)))

    def check_dims(self, sys: LinearGaussianSystem) -> None:
        if self.a_l.shape != (sys.n, sys.n) or self.b_l.shape != (sys.n, sys.m):
            raise DimensionError(
                f"policy blocks {self.a_l.shape}/{self.b_l.shape} do not match "
                f"system with n={sys.n}, m={sys.m}"
            )


@dataclass(frozen=True, eq=False)
class MomentState:
    """Uncentered moments of (x_t, xhat_t).

    var_x = E[x x^T], var_xhat = E[xhat xhat^T], cov_x_xhat = E[x xhat^T],
    together with the two means.  At t=0 these are
    var_xhat = cov_x_xhat = x0_mean x0_mean^T and var_x adds x0_cov.
    """

    var_x: np.ndarray
    var_xhat: np.ndarray
    cov_x_xhat: np.ndarray
    mean_x: np.ndarray
    mean_xhat: np.ndarray
    t: int


def initial_moments(sys: LinearGaussianSystem) -> MomentState:
    outer = np.outer(sys.x0_mean, sys.x0_mean)
    return MomentState(
        var_x=outer + sys.x0_cov,
        var_xhat=outer.copy(),
        cov_x_xhat=outer.copy(),
        mean_x=sys.x0_mean.copy(),
        mean_xhat=sys.x0_mean.copy(),
        t=0,
    )


def _psi_matrix(sys: LinearGaussianSystem, state: MomentState) -> np.ndarray:
    c = sys.c
    top = np.hstack([state.var_xhat, state.cov_x_xhat.T @ c.T])
    bottom = np.hstack([c @ state.cov_x_xhat, c @ state.var_x @ c.T + sys.v])
    return symmetrize(np.vstack([top, bottom]))


def advance_moments(
    sys: LinearGaussianSystem, state: MomentState, policy: FilterPolicy
) -> MomentState:
    """Push the moment state one step forward under a fixed filter block."""
    policy.check_dims(sys)
    a, c = sys.a, sys.c
    pi = policy.stacked
    psi = _psi_matrix(sys, state)
    var_xhat = symmetrize(pi @ psi @ pi.T)
    cov = a @ np.hstack([state.cov_x_xhat, state.var_x @ c.T]) @ pi.T
    var_x = symmetrize(a @ state.var_x @ a.T + sys.w)
    mean_x = a @ state.mean_x
    mean_xhat = pi @ np.concatenate([state.mean_xhat, c @ state.mean_x])
    return MomentState(
        var_x=var_x,
        var_xhat=var_xhat,
        cov_x_xhat=cov,
        mean_x=mean_x,
        mean_xhat=mean_xhat,
        t=state.t + 1,
    )


def propagate_moments(
    sys: LinearGaussianSystem, policies: Sequence[FilterPolicy], steps: int
) -> MomentState:
    """Moment state at time `steps` under the first `steps` filter blocks."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if len(policies) < steps:
        raise DimensionError(f"need {steps} policies, got {len(policies)}")
    state = initial_moments(sys)
    for t in range(steps):
        state = advance_moments(sys, state, policies[t])
    return state


@dataclass(frozen=True, eq=False)
class GradientKernel:
    """Quadratic-subproblem kernels at one step.

    psi and g carry the plain second moments; delta and xi carry the
    contribution of the shared injected noise.  The gradient of the cost
    at pi is 2 [pi (psi + delta) - (g + xi)].
    """

    psi: np.ndarray
    g: np.ndarray
    delta: np.ndarray
    xi: np.ndarray

    @property
    def psi_total(self) -> np.ndarray:
        return self.psi + self.delta

    @property
    def g_total(self) -> np.ndarray:
        return self.g + self.xi


def injection_kernels(sys: LinearGaussianSystem) -> tuple[np.ndarray, np.ndarray]:
    """Policy-independent kernels (delta, xi) of the injected noise."""
    theta, a, c = sys.theta_cov, sys.a, sys.c
    delta_top = np.hstack([theta, theta @ c.T])
    delta_bottom = np.hstack([c @ theta, c @ theta @ c.T])
    delta = symmetrize(np.vstack([delta_top, delta_bottom]))
    xi = np.hstack([a @ theta, a @ theta @ c.T])
    return delta, xi


def gradient_kernel(sys: LinearGaussianSystem, moments: MomentState) -> GradientKernel:
    """Assemble (psi, g, delta, xi) from the moment state at step h."""
    a, c = sys.a, sys.c
    psi = _psi_matrix(sys, moments)
    g = np.hstack([a @ moments.cov_x_xhat, a @ moments.var_x @ c.T])
    delta, xi = injection_kernels(sys)
    return GradientKernel(psi=psi, g=g, delta=delta, xi=xi)


def analytic_gradient(policy: FilterPolicy, kernel: GradientKernel) -> np.ndarray:
    """Exact gradient 2 [pi (psi + delta) - (g + xi)] of the subproblem cost."""
    pi = policy.stacked
    if pi.shape[1] != kernel.psi.shape[0]:
        raise DimensionError(
            f"policy width {pi.shape[1]} does not match kernel size {kernel.psi.shape[0]}"
        )
    return 2.0 * (pi @ kernel.psi_total - kernel.g_total)


def subproblem_minimizer(kernel: GradientKernel) -> np.ndarray:
    """Unique stationary point (g + xi)(psi + delta)^{-1} of the quadratic."""
    return np.linalg.solve(kernel.psi_total.T, kernel.g_total.T).T


def _error_trace(state: MomentState) -> float:
    return float(
        np.trace(state.var_x) - 2.0 * np.trace(state.cov_x_xhat) + np.trace(state.var_xhat)
    )


def _terminal_cost(
    sys: LinearGaussianSystem, kernel: GradientKernel, moments: MomentState, pi: np.ndarray
) -> float:
    """Expected error at step h+1 under the candidate, injection included."""
    a = sys.a
    var_next = a @ (moments.var_x + sys.theta_cov) @ a.T + sys.w
    return float(
        np.trace(var_next)
        - 2.0 * np.trace(kernel.g_total @ pi.T)
        + np.trace(pi @ kernel.psi_total @ pi.T)
    )


def subproblem_cost(
    sys: LinearGaussianSystem,
    policies: Sequence[FilterPolicy],
    candidate: FilterPolicy,
    h: int,
) -> float:
    """Exact expected cost of the step-h subproblem at the candidate block.

    Sums E||x_t - xhat_t||^2 for t = 0..h+1 with the injected noise
    entering both state and estimate at step h; the injection leaves the
    t <= h terms unchanged and adds Tr(Lambda^T Lambda Theta) with
    Lambda = A - B_L C - A_L to the terminal term.  Deterministic.
    """
    candidate.check_dims(sys)
    if len(policies) < h:
        raise DimensionError(f"need {h} prior policies, got {len(policies)}")
    state = initial_moments(sys)
    total = _error_trace(state)
    for t in range(h):
        state = advance_moments(sys, state, policies[t])
        total += _error_trace(state)
    kernel = gradient_kernel(sys, state)
    return total + _terminal_cost(sys, kernel, state, candidate.stacked)


@dataclass(frozen=True, eq=False)
class HessianInfo:
    matrix: np.ndarray
    lambda_min: float
    lambda_max: float


def hessian_kernel(kernel: GradientKernel) -> HessianInfo:
    """Curvature kernel 2 (psi + delta) with its extreme eigenvalues.

    Raises LandscapeDegeneracyError when the smallest eigenvalue is zero
    to working precision, which happens without injection when the
    moment matrix is rank deficient.
    """
    h = 2.0 * symmetrize(kernel.psi_total)
    eigs = np.linalg.eigvalsh(h)
    lo, hi = float(eigs[0]), float(eigs[-1])
    if lo <= 1e-10 * max(1.0, hi):
        raise LandscapeDegeneracyError(
            f"subproblem Hessian is singular (lambda_min={lo:.3e}); "
            "injection covariance is zero or moments are rank deficient",
            lambda_min=lo,
        )
    return HessianInfo(matrix=h, lambda_min=lo, lambda_max=hi)


def mean_based_hessian(sys: LinearGaussianSystem, moments: MomentState) -> np.ndarray:
    """Curvature surrogate built from mean outer products plus injection.

    Uses mu mu^T + Theta blocks in place of the full second moments; kept
    for diagnostics alongside the moment-based kernel.
    """
    c, theta, v = sys.c, sys.theta_cov, sys.v
    mhat = np.outer(moments.mean_xhat, moments.mean_xhat) + theta
    mcross = np.outer(moments.mean_xhat, moments.mean_x) + theta
    mx = np.outer(moments.mean_x, moments.mean_x) + theta
    top = np.hstack([mhat, mcross @ c.T])
    bottom = np.hstack([c @ mcross.T, c @ mx @ c.T + v])
    return symmetrize(np.vstack([top, bottom]))
