"""Session fixtures shared across the suite.

The n=64 benchmark plant and everything derived from it are expensive,
so they are built once per session.
"""

from __future__ import annotations

import pytest

from rhpgkf import (
    CDParams,
    FilterPolicy,
    RHPGConfig,
    build_cd_system,
    rhpg_first_order,
    solve_fare,
)


@pytest.fixture(scope="session")
def cd64_system():
    return build_cd_system(CDParams(n=64, m=5))


@pytest.fixture(scope="session")
def cd64_fare(cd64_system):
    return solve_fare(cd64_system)


@pytest.fixture(scope="session")
def cd64_kf_policy(cd64_fare):
    return FilterPolicy(a_l=cd64_fare.closed_loop, b_l=cd64_fare.gain)


@pytest.fixture(scope="session")
def cd64_learned_n51(cd64_system):
    cfg = RHPGConfig(horizon=51, mode="first_order", grad_tol=1e-4, max_inner_iters=30_000)
    return rhpg_first_order(cd64_system, cfg)


@pytest.fixture(scope="session")
def cd64_learned_n1(cd64_system):
    cfg = RHPGConfig(horizon=1, mode="first_order", grad_tol=1e-4, max_inner_iters=30_000)
    return rhpg_first_order(cd64_system, cfg)
