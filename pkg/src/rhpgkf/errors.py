"""Exception types shared across the package.

The CLI maps these onto its exit-code contract (2 usage, 3 solver
non-convergence, 4 optimizer divergence).
"""


class DimensionError(ValueError):
    """Matrix or vector shapes are inconsistent with the system."""


class DefinitenessError(ValueError):
    """A covariance fails its symmetry / definiteness requirement."""


class NumericalError(RuntimeError):
    """A dense linear solve or factorization failed."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration exhausted its budget without converging."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class UnstableFilterError(RuntimeError):
    """A converged solution produced a closed loop with spectral radius >= 1."""


class BoundInapplicableError(ValueError):
    """The horizon bound requires a closed-loop induced norm < 1."""


class LandscapeDegeneracyError(RuntimeError):
    """The subproblem Hessian is singular (no strong convexity)."""

    def __init__(self, message: str, lambda_min: float):
        super().__init__(message)
        self.lambda_min = lambda_min


class DivergenceError(RuntimeError):
    """An optimizer iterate became non-finite or unreasonably large."""
