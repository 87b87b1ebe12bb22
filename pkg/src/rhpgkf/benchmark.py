"""Convection-diffusion benchmark plant.

Spectral discretization of dc/dt = nu d2c/dx2 - vel dc/dx on a periodic
unit domain with exact-in-time integration: the transition matrix is
circulant, diagonalized by the DFT, with per-wavenumber multipliers
exp((-i vel k - nu k^2) dt).  Sensors read raw state entries at evenly
spaced grid points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .model import LinearGaussianSystem

_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class CDParams:
    n: int = 200
    m: int = 5
    nu: float = 2e-3
    vel: float = 5e-2
    dt: float = 0.05
    v_scale: float = 1e-1
    w_scale: float = 1e-9
    theta_scale: float = 1e-2

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError("n must be even and >= 2 (wavenumber vector splits at n/2)")
        if not (1 <= self.m <= self.n):
            raise ValueError("sensor count must satisfy 1 <= m <= n")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if min(self.v_scale, self.w_scale, self.theta_scale) <= 0.0:
            raise ValueError("noise scales must be positive")
        if self.nu < 0.0:
            raise ValueError("nu must be nonnegative")


def wavenumbers(n: int) -> np.ndarray:
    """2 pi [0..n/2-1, 0, -n/2+1..-1]; the unpaired mode at n/2 is zeroed."""
    half = n // 2
    k = np.concatenate([np.arange(half), [0], np.arange(-half + 1, 0)])
    return 2.0 * np.pi * k


def cd_multipliers(p: CDParams) -> np.ndarray:
    """Closed-form per-wavenumber eigenvalues of the transition matrix."""
    k = wavenumbers(p.n)
    return np.exp((-1j * p.vel * k - p.nu * k**2) * p.dt)


def sensor_indices(n: int, m: int) -> list[int]:
    """Evenly spaced sensor columns floor(j n / m), j = 0..m-1."""
    return [(j * n) // m for j in range(m)]


def initial_condition(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Initial mean profile and the rank-one covariance factor.

    Mean is sech(10 (x - 1/2)) on the grid x_k = k/n; the covariance is
    the outer product of sin(2 pi x)/4 with itself.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    grid = np.arange(n) / n
    mean = 1.0 / np.cosh(10.0 * (grid - 0.5))
    factor = np.sin(2.0 * np.pi * grid) / 4.0
    return mean, factor


def build_cd_system(p: CDParams) -> LinearGaussianSystem:
    """Assemble the benchmark plant from physical parameters.

    A = (1/n) D^H diag(multipliers) D with D the DFT matrix; the product
    is real up to rounding, asserted below 1e-10 before the imaginary
    part is dropped.
    """
    n = p.n
    idx = np.arange(n)
    dft = np.exp(-2j * np.pi * np.outer(idx, idx) / n)
    mult = cd_multipliers(p)
    a_complex = (dft.conj().T * mult) @ dft / n
    imag_max = float(np.abs(a_complex.imag).max())
    if imag_max > _IMAG_TOL:
        raise NumericalError(
            f"transition matrix has imaginary residual {imag_max:.3e}; "
            "spectral multipliers are not conjugate-paired"
        )
    a = a_complex.real.copy()
    c = np.zeros((p.m, n))
    for j, col in enumerate(sensor_indices(n, p.m)):
        c[j, col] = 1.0
    mean, factor = initial_condition(n)
    return LinearGaussianSystem(
        a=a,
        c=c,
        w=p.w_scale * np.eye(n),
        v=p.v_scale * np.eye(p.m),
        x0_mean=mean,
        x0_cov=np.outer(factor, factor),
        theta_cov=p.theta_scale * np.eye(n),
    )
