"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from rhpgkf import FilterPolicy, LinearGaussianSystem


def random_pd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    b = rng.standard_normal((n, n))
    return scale * (b @ b.T / n + np.eye(n))


def random_system(
    rng: np.random.Generator,
    n: int,
    m: int,
    a_radius: float = 0.9,
    theta_scale: float = 1e-2,
) -> LinearGaussianSystem:
    """Generic observable system with spectral radius of A below a_radius."""
    a = rng.standard_normal((n, n))
    rho = np.abs(np.linalg.eigvals(a)).max()
    a = a * (a_radius / max(rho, 1e-12))
    c = rng.standard_normal((m, n))
    mean = rng.standard_normal(n)
    while np.linalg.norm(mean) < 0.3:
        mean = rng.standard_normal(n)
    return LinearGaussianSystem(
        a=a,
        c=c,
        w=random_pd(rng, n, 0.5),
        v=random_pd(rng, m, 0.5),
        x0_mean=mean,
        x0_cov=random_pd(rng, n, 0.7),
        theta_cov=theta_scale * np.eye(n),
    )


def applicable_random_system(
    rng: np.random.Generator, n: int, m: int, max_tries: int = 80, **kwargs
):
    """Random system whose closed loop contracts in the weighted norm.

    Resamples until the horizon bound applies; returns (system, fare).
    """
    from rhpgkf import sigma_induced_norm, solve_fare

    for _ in range(max_tries):
        sys1 = random_system(rng, n, m, **kwargs)
        sol = solve_fare(sys1)
        if sigma_induced_norm(sol.closed_loop, sol.sigma) < 1.0:
            return sys1, sol
    raise AssertionError("no applicable system found")


def scalar_system(
    a=1.0, c=1.0, w=1.0, v=1.0, x0_mean=1.0, x0_cov=1.0, theta=1e-2
) -> LinearGaussianSystem:
    return LinearGaussianSystem(
        a=np.array([[float(a)]]),
        c=np.array([[float(c)]]),
        w=np.array([[float(w)]]),
        v=np.array([[float(v)]]),
        x0_mean=np.array([float(x0_mean)]),
        x0_cov=np.array([[float(x0_cov)]]),
        theta_cov=np.array([[float(theta)]]),
    )


def random_policy(rng: np.random.Generator, n: int, m: int, scale: float = 0.4) -> FilterPolicy:
    return FilterPolicy(
        a_l=scale * rng.standard_normal((n, n)),
        b_l=scale * rng.standard_normal((n, m)),
    )


def kf_policy_sequence(sys: LinearGaussianSystem, gains) -> list[FilterPolicy]:
    return [FilterPolicy(a_l=sys.a - L @ sys.c, b_l=L) for L, _ in gains]
