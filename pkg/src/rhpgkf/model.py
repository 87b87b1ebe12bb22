"""Plant description and model-based estimation oracles.

Holds the linear-Gaussian system, the forward Riccati difference
iteration and its algebraic fixed point, Kalman gains, the weighted
induced norm used as the contraction metric, and the horizon bound that
says how many forward steps bring the time-varying gain within a given
distance of the steady-state gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundInapplicableError,
    ConvergenceError,
    DefinitenessError,
    DimensionError,
    NumericalError,
    UnstableFilterError,
)

_SYM_TOL = 1e-12
_PSD_TOL = 1e-12


def _as_matrix(x, name: str) -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be a 2-d matrix, got ndim={m.ndim}")
    return m


def _require_symmetric(m: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got {m.shape}")
    if float(np.abs(m - m.T).max(initial=0.0)) > _SYM_TOL * scale:
        raise DefinitenessError(f"{name} is not symmetric")


def _require_pd(m: np.ndarray, name: str) -> None:
    _require_symmetric(m, name)
    if np.linalg.eigvalsh(0.5 * (m + m.T)).min() <= 0.0:
        raise DefinitenessError(f"{name} must be positive definite")


def _require_psd(m: np.ndarray, name: str) -> None:
    _require_symmetric(m, name)
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    if w.min() < -_PSD_TOL * max(1.0, float(w.max(initial=0.0))):
        raise DefinitenessError(f"{name} must be positive semidefinite")


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def spectral_radius(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(m)).max())


def spd_sqrt_pair(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric square root of a pd matrix and its inverse.

    Rejects inputs with an eigenvalue below -1e-12 outright and singular
    ones (no inverse root exists there).
    """
    w, u = np.linalg.eigh(symmetrize(sigma))
    if w.min() < -_PSD_TOL * max(1.0, float(w.max(initial=0.0))):
        raise DefinitenessError("matrix has an eigenvalue below -1e-12, not psd")
    if w.min() <= 0.0:
        raise DefinitenessError("matrix is singular, positive definite required")
    root = np.sqrt(w)
    return u @ np.diag(root) @ u.T, u @ np.diag(1.0 / root) @ u.T


def psd_factor(m: np.ndarray, name: str = "covariance") -> np.ndarray:
    """Factor F with F F^T = m for a psd matrix, via eigendecomposition.

    Supports rank-deficient inputs; eigenvalues in [-1e-12, 0] are
    treated as exact zeros.
    """
    w, u = np.linalg.eigh(symmetrize(m))
    if w.min() < -_PSD_TOL * max(1.0, float(w.max(initial=0.0))):
        raise DefinitenessError(f"{name} must be positive semidefinite")
    return u @ np.diag(np.sqrt(np.clip(w, 0.0, None)))


@dataclass(frozen=True, eq=False)
class LinearGaussianSystem:
    """Discrete-time plant x' = A x + w, y = C x + v.

    w ~ N(0, W) and v ~ N(0, V) are i.i.d. and mutually independent,
    x0 ~ N(x0_mean, x0_cov), and theta_cov is the covariance of the
    shared convexifying noise injected into state and estimate when a
    one-step subproblem is built.
    """

    a: np.ndarray
    c: np.ndarray
    w: np.ndarray
    v: np.ndarray
    x0_mean: np.ndarray
    x0_cov: np.ndarray
    theta_cov: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.a, "a")
        c = _as_matrix(self.c, "c")
        w = _as_matrix(self.w, "w")
        v = _as_matrix(self.v, "v")
        x0_cov = _as_matrix(self.x0_cov, "x0_cov")
        theta_cov = _as_matrix(self.theta_cov, "theta_cov")
        x0_mean = np.asarray(self.x0_mean, dtype=float).reshape(-1)
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"a must be square, got {a.shape}")
        m = c.shape[0]
        if c.shape != (m, n):
            raise DimensionError(f"c must be m x n with n={n}, got {c.shape}")
        if w.shape != (n, n):
            raise DimensionError(f"w must be {n} x {n}, got {w.shape}")
        if v.shape != (m, m):
            raise DimensionError(f"v must be {m} x {m}, got {v.shape}")
        if x0_cov.shape != (n, n):
            raise DimensionError(f"x0_cov must be {n} x {n}, got {x0_cov.shape}")
        if theta_cov.shape != (n, n):
            raise DimensionError(f"theta_cov must be {n} x {n}, got {theta_cov.shape}")
        if x0_mean.shape != (n,):
            raise DimensionError(f"x0_mean must have length {n}, got {x0_mean.shape}")
        _require_pd(w, "w")
        _require_pd(v, "v")
        # theta_cov and x0_cov only need psd: zero injection is allowed for
        # landscape diagnostics, and rank-deficient initial covariances occur
        # in the benchmark.  Strict positivity is enforced where the learner
        # actually needs it.
        _require_psd(theta_cov, "theta_cov")
        _require_psd(x0_cov, "x0_cov")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "w", symmetrize(w))
        object.__setattr__(self, "v", symmetrize(v))
        object.__setattr__(self, "x0_mean", x0_mean)
        object.__setattr__(self, "x0_cov", symmetrize(x0_cov))
        object.__setattr__(self, "theta_cov", symmetrize(theta_cov))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Fixed point of the forward Riccati iteration.

    sigma is the steady-state one-step prediction error covariance, gain
    the steady-state Kalman gain, closed_loop = A - gain C, residual the
    Frobenius norm of the algebraic-equation defect, iterations the
    number of forward steps used.  x0_dominates records whether
    x0_cov > sigma, the condition under which every frozen time-varying
    gain is stabilizing; it is diagnostic only.
    """

    sigma: np.ndarray
    gain: np.ndarray
    closed_loop: np.ndarray
    residual: float
    iterations: int
    x0_dominates: bool = False


def _innovation_solve(sys: LinearGaussianSystem, sigma: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    s = sys.v + sys.c @ sigma @ sys.c.T
    try:
        return np.linalg.solve(s, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "innovation covariance V + C Sigma C^T is singular; V must be pd"
        ) from exc


def _check_sigma(sys: LinearGaussianSystem, sigma: np.ndarray) -> np.ndarray:
    sigma = _as_matrix(sigma, "sigma")
    if sigma.shape != (sys.n, sys.n):
        raise DimensionError(f"sigma must be {sys.n} x {sys.n}, got {sigma.shape}")
    _require_symmetric(sigma, "sigma")
    return sigma


def frde_step(sys: LinearGaussianSystem, sigma_t: np.ndarray) -> np.ndarray:
    """One forward Riccati step.

    Sigma' = A Sigma A^T - A Sigma C^T (V + C Sigma C^T)^{-1} C Sigma A^T + W,
    symmetrized on output to suppress floating-point drift.
    """
    sigma_t = _check_sigma(sys, sigma_t)
    a, c, w = sys.a, sys.c, sys.w
    asc = a @ sigma_t @ c.T
    correction = asc @ _innovation_solve(sys, sigma_t, asc.T)
    return symmetrize(a @ sigma_t @ a.T - correction + w)


def kalman_gain(sys: LinearGaussianSystem, sigma: np.ndarray) -> np.ndarray:
    """Gain L = A Sigma C^T (V + C Sigma C^T)^{-1} for a given error covariance."""
    sigma = _check_sigma(sys, sigma)
    asc = sys.a @ sigma @ sys.c.T
    return _innovation_solve(sys, sigma, asc.T).T


def solve_fare(
    sys: LinearGaussianSystem, tol: float = 1e-12, max_iter: int = 1_000_000
) -> RiccatiSolution:
    """Iterate the forward Riccati step to its algebraic fixed point.

    Starts from x0_cov (or from W when x0_cov is exactly zero) and stops
    once the relative Frobenius change drops below tol.  The iteration
    converges exponentially for observable systems, so no dedicated
    algebraic solver is used.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    sigma = sys.x0_cov.copy()
    if not np.any(sigma):
        sigma = sys.w.copy()
    iterations = 0
    converged = False
    for _ in range(max_iter):
        nxt = frde_step(sys, sigma)
        iterations += 1
        delta = float(np.linalg.norm(nxt - sigma))
        sigma = nxt
        if delta / max(1.0, float(np.linalg.norm(sigma))) < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"Riccati iteration did not converge within {max_iter} steps "
            "(system may be unobservable or ill posed)",
            iterations,
        )
    gain = kalman_gain(sys, sigma)
    closed_loop = sys.a - gain @ sys.c
    residual = float(np.linalg.norm(frde_step(sys, sigma) - sigma))
    rho = spectral_radius(closed_loop)
    if rho >= 1.0:
        raise UnstableFilterError(
            f"converged solution has unstable closed loop, rho={rho:.6f}"
        )
    diff = sys.x0_cov - sigma
    dominates = bool(np.linalg.eigvalsh(symmetrize(diff)).min() > 0.0)
    return RiccatiSolution(
        sigma=sigma,
        gain=gain,
        closed_loop=closed_loop,
        residual=residual,
        iterations=iterations,
        x0_dominates=dominates,
    )


def time_varying_gains(
    sys: LinearGaussianSystem, horizon: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gains and error covariances (L_t, Sigma_t) for t = 0..horizon-1.

    Sigma_0 = x0_cov and Sigma_{t+1} = frde_step(Sigma_t).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    out = []
    sigma = sys.x0_cov.copy()
    for _ in range(horizon):
        out.append((kalman_gain(sys, sigma), sigma))
        sigma = frde_step(sys, sigma)
    return out


def sigma_induced_norm(x: np.ndarray, sigma: np.ndarray) -> float:
    """Weighted induced norm: spectral norm of Sigma^{1/2} X Sigma^{-1/2}.

    Equals max over z != 0 of sqrt(z^T X^T Sigma X z / z^T Sigma z).
    """
    x = _as_matrix(x, "x")
    sigma = _as_matrix(sigma, "sigma")
    if x.shape != sigma.shape:
        raise DimensionError(f"x and sigma must both be {sigma.shape}")
    root, inv_root = spd_sqrt_pair(sigma)
    return float(np.linalg.norm(root @ x @ inv_root, 2))


def _horizon_bound_raw(
    sys: LinearGaussianSystem, eps: float, fare: RiccatiSolution
) -> float:
    induced = sigma_induced_norm(fare.closed_loop, fare.sigma)
    if induced >= 1.0:
        raise BoundInapplicableError(
            f"closed-loop induced norm {induced:.6f} >= 1; bound does not apply"
        )
    init_err = sigma_induced_norm(sys.x0_cov - fare.sigma, fare.sigma)
    if init_err == 0.0:
        return -math.inf
    sig_eigs = np.linalg.eigvalsh(fare.sigma)
    kappa = float(sig_eigs.max() / sig_eigs.min())
    numerator = (
        init_err
        * kappa
        * float(np.linalg.norm(fare.closed_loop, 2))
        * float(np.linalg.norm(sys.c, 2))
    )
    lam_min_v = float(np.linalg.eigvalsh(sys.v).min())
    return 0.5 * math.log(numerator / (eps * lam_min_v)) / math.log(1.0 / induced) + 1.0


def horizon_bound(
    sys: LinearGaussianSystem, eps: float, fare: RiccatiSolution | None = None
) -> int:
    """Smallest forward horizon guaranteeing the final time-varying gain
    is within eps of the steady-state gain.

    Evaluates
        N0 = (1/2) log(||X0 - Sigma||_* kappa ||A_L|| ||C|| / (eps lmin(V)))
             / log(1 / ||A_L||_*)  + 1
    with ||.||_* the sigma-induced norm at the fixed point, then returns
    the ceiling clamped below at 1.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if fare is None:
        fare = solve_fare(sys)
    value = _horizon_bound_raw(sys, eps, fare)
    if value == -math.inf:
        return 1
    return max(1, math.ceil(value))
