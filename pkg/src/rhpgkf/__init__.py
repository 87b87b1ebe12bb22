"""Learning linear state estimators from simulated rollouts.

Receding-horizon policy gradient over one-step estimation subproblems,
with model-based Riccati oracles for verification and a spectral
convection-diffusion benchmark.
"""

from .benchmark import CDParams, build_cd_system, cd_multipliers, initial_condition, sensor_indices
from .landscape import (
    FilterPolicy,
    GradientKernel,
    HessianInfo,
    MomentState,
    advance_moments,
    analytic_gradient,
    gradient_kernel,
    hessian_kernel,
    initial_moments,
    mean_based_hessian,
    propagate_moments,
    subproblem_cost,
    subproblem_minimizer,
)
from .model import (
    LinearGaussianSystem,
    RiccatiSolution,
    frde_step,
    horizon_bound,
    kalman_gain,
    sigma_induced_norm,
    solve_fare,
    spectral_radius,
    time_varying_gains,
)
from .rhpg import (
    AdamParams,
    RHPGConfig,
    RHPGTrace,
    ZOParams,
    adam_step,
    estimate_from_rollout,
    policy_distance,
    rhpg_first_order,
    rhpg_zeroth_order,
    two_point_gradient_estimate,
)
from .simulator import (
    Trajectory,
    empirical_cost,
    injected_rollout_batch,
    rollout_with_injection,
    run_filter,
    sample_trajectory,
    substream,
)

__all__ = [
    "AdamParams",
    "CDParams",
    "FilterPolicy",
    "GradientKernel",
    "HessianInfo",
    "LinearGaussianSystem",
    "MomentState",
    "RHPGConfig",
    "RHPGTrace",
    "RiccatiSolution",
    "Trajectory",
    "ZOParams",
    "adam_step",
    "advance_moments",
    "analytic_gradient",
    "build_cd_system",
    "cd_multipliers",
    "empirical_cost",
    "estimate_from_rollout",
    "frde_step",
    "gradient_kernel",
    "hessian_kernel",
    "horizon_bound",
    "initial_condition",
    "initial_moments",
    "injected_rollout_batch",
    "kalman_gain",
    "mean_based_hessian",
    "policy_distance",
    "propagate_moments",
    "rhpg_first_order",
    "rhpg_zeroth_order",
    "rollout_with_injection",
    "run_filter",
    "sample_trajectory",
    "sensor_indices",
    "sigma_induced_norm",
    "solve_fare",
    "spectral_radius",
    "subproblem_cost",
    "subproblem_minimizer",
    "substream",
    "time_varying_gains",
    "two_point_gradient_estimate",
]

__version__ = "0.1.0"
