"""Subproblem landscape tests: moments, gradient, cost, curvature."""

import numpy as np
import pytest

from rhpgkf import (
    FilterPolicy,
    LinearGaussianSystem,
    analytic_gradient,
    frde_step,
    gradient_kernel,
    hessian_kernel,
    initial_moments,
    kalman_gain,
    mean_based_hessian,
    propagate_moments,
    subproblem_cost,
    subproblem_minimizer,
    time_varying_gains,
)
from rhpgkf.errors import LandscapeDegeneracyError

from util import kf_policy_sequence, random_pd, random_policy, random_system, scalar_system


def with_theta(sys1: LinearGaussianSystem, theta: np.ndarray) -> LinearGaussianSystem:
    return LinearGaussianSystem(
        a=sys1.a,
        c=sys1.c,
        w=sys1.w,
        v=sys1.v,
        x0_mean=sys1.x0_mean,
        x0_cov=sys1.x0_cov,
        theta_cov=theta,
    )


class TestMoments:
    def test_initialization(self):
        rng = np.random.default_rng(0)
        sys1 = random_system(rng, 3, 2)
        state = propagate_moments(sys1, [], 0)
        outer = np.outer(sys1.x0_mean, sys1.x0_mean)
        assert np.array_equal(state.var_xhat, outer)
        assert np.array_equal(state.cov_x_xhat, outer)
        assert np.allclose(state.var_x, outer + sys1.x0_cov, atol=1e-15)
        assert np.array_equal(state.mean_x, sys1.x0_mean)
        assert state.t == 0

    def test_zero_policy_annihilates_estimator_moments(self):
        rng = np.random.default_rng(1)
        sys1 = random_system(rng, 2, 1)
        zero = FilterPolicy.zero(2, 1)
        state = propagate_moments(sys1, [zero] * 3, 3)
        assert np.allclose(state.var_xhat, 0.0, atol=1e-15)
        assert np.allclose(state.cov_x_xhat, 0.0, atol=1e-15)
        assert np.allclose(state.mean_xhat, 0.0, atol=1e-15)
        # open-loop second moment follows the Lyapunov recursion
        expect = np.outer(sys1.x0_mean, sys1.x0_mean) + sys1.x0_cov
        for _ in range(3):
            expect = sys1.a @ expect @ sys1.a.T + sys1.w
        assert np.allclose(state.var_x, expect, atol=1e-12)

    def test_stacked_moment_matrix_psd(self):
        rng = np.random.default_rng(2)
        sys1 = random_system(rng, 3, 1)
        policies = [random_policy(rng, 3, 1) for _ in range(4)]
        state = propagate_moments(sys1, policies, 4)
        stacked = np.block(
            [[state.var_xhat, state.cov_x_xhat.T], [state.cov_x_xhat, state.var_x]]
        )
        assert np.linalg.eigvalsh(0.5 * (stacked + stacked.T)).min() > -1e-10

    def test_matches_monte_carlo(self):
        # independent batched simulation of plant + filter, no injection
        rng = np.random.default_rng(3)
        n, m, h, samples = 2, 1, 3, 1_000_000
        sys1 = random_system(rng, n, m)
        policies = [random_policy(rng, n, m) for _ in range(h)]
        state = propagate_moments(sys1, policies, h)

        sim = np.random.default_rng(1234)
        lx0 = np.linalg.cholesky(sys1.x0_cov)
        lw = np.linalg.cholesky(sys1.w)
        lv = np.linalg.cholesky(sys1.v)
        x = sys1.x0_mean + sim.standard_normal((samples, n)) @ lx0.T
        xhat = np.tile(sys1.x0_mean, (samples, 1))
        for t in range(h):
            y = x @ sys1.c.T + sim.standard_normal((samples, m)) @ lv.T
            xhat = xhat @ policies[t].a_l.T + y @ policies[t].b_l.T
            x = x @ sys1.a.T + sim.standard_normal((samples, n)) @ lw.T

        def check(emp_samples, analytic):
            emp = emp_samples.mean(axis=0)
            se = emp_samples.std(axis=0, ddof=1) / np.sqrt(samples)
            assert np.all(np.abs(emp - analytic) <= 3.0 * se + 1e-12)

        check(np.einsum("bi,bj->bij", x, x), state.var_x)
        check(np.einsum("bi,bj->bij", xhat, xhat), state.var_xhat)
        check(np.einsum("bi,bj->bij", x, xhat), state.cov_x_xhat)
        check(x, state.mean_x)
        check(xhat, state.mean_xhat)


class TestGradientKernel:
    def test_zero_injection_zeroes_delta_xi(self):
        rng = np.random.default_rng(4)
        sys1 = with_theta(random_system(rng, 2, 1), np.zeros((2, 2)))
        kernel = gradient_kernel(sys1, initial_moments(sys1))
        assert np.array_equal(kernel.delta, np.zeros((3, 3)))
        assert np.array_equal(kernel.xi, np.zeros((2, 3)))

    def test_scalar_closed_form(self):
        sys1 = scalar_system(v=0.1, theta=0.01)
        kernel = gradient_kernel(sys1, initial_moments(sys1))
        assert np.allclose(
            kernel.psi_total, np.array([[1.01, 1.01], [1.01, 2.11]]), atol=1e-14
        )

    def test_psi_total_positive_definite(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            sys1 = random_system(rng, 3, 2)
            policies = [random_policy(rng, 3, 2) for _ in range(4)]
            state = propagate_moments(sys1, policies, 4)
            kernel = gradient_kernel(sys1, state)
            assert np.linalg.eigvalsh(kernel.psi_total).min() > 0.0


class TestAnalyticGradient:
    def test_zero_at_minimizer(self):
        rng = np.random.default_rng(6)
        sys1 = random_system(rng, 2, 2)
        policies = [random_policy(rng, 2, 2) for _ in range(2)]
        kernel = gradient_kernel(sys1, propagate_moments(sys1, policies, 2))
        pi_star = FilterPolicy.from_stacked(subproblem_minimizer(kernel))
        assert np.linalg.norm(analytic_gradient(pi_star, kernel)) < 1e-10

    def test_zero_at_exact_time_varying_filter(self):
        rng = np.random.default_rng(7)
        for h in (0, 2, 4):
            sys1 = random_system(rng, 3, 1)
            gains = time_varying_gains(sys1, h + 1)
            priors = kf_policy_sequence(sys1, gains[:h])
            kernel = gradient_kernel(sys1, propagate_moments(sys1, priors, h))
            gain_h = gains[h][0]
            candidate = FilterPolicy(a_l=sys1.a - gain_h @ sys1.c, b_l=gain_h)
            assert np.linalg.norm(analytic_gradient(candidate, kernel)) < 1e-9

    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(8)
        step = 1e-5
        for _ in range(10):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(1, 3))
            h = int(rng.integers(0, 6))
            sys1 = random_system(rng, n, m)
            policies = [random_policy(rng, n, m) for _ in range(h)]
            candidate = random_policy(rng, n, m)
            kernel = gradient_kernel(sys1, propagate_moments(sys1, policies, h))
            grad = analytic_gradient(candidate, kernel)
            fd = np.zeros_like(grad)
            base = candidate.stacked
            for i in range(base.shape[0]):
                for j in range(base.shape[1]):
                    plus = base.copy()
                    plus[i, j] += step
                    minus = base.copy()
                    minus[i, j] -= step
                    fd[i, j] = (
                        subproblem_cost(sys1, policies, FilterPolicy.from_stacked(plus), h)
                        - subproblem_cost(sys1, policies, FilterPolicy.from_stacked(minus), h)
                    ) / (2.0 * step)
            assert np.linalg.norm(fd - grad) <= 1e-6 * max(1.0, np.linalg.norm(grad))


class TestSubproblemCost:
    def test_exact_filter_cost_equals_riccati_trace_sum(self):
        rng = np.random.default_rng(9)
        sys1 = random_system(rng, 2, 1)
        h = 3
        gains = time_varying_gains(sys1, h + 1)
        priors = kf_policy_sequence(sys1, gains[:h])
        gain_h = gains[h][0]
        candidate = FilterPolicy(a_l=sys1.a - gain_h @ sys1.c, b_l=gain_h)
        cost = subproblem_cost(sys1, priors, candidate, h)
        sigma_sum = sum(np.trace(sigma) for _, sigma in gains)
        sigma_sum += np.trace(frde_step(sys1, gains[-1][1]))
        assert cost == pytest.approx(sigma_sum, rel=1e-12)

    def test_structured_candidate_ignores_injection(self):
        # when a_l = a - b_l c the injection residual vanishes for any theta
        rng = np.random.default_rng(10)
        base = random_system(rng, 2, 1)
        b_l = rng.standard_normal((2, 1))
        candidate = FilterPolicy(a_l=base.a - b_l @ base.c, b_l=b_l)
        priors = [random_policy(rng, 2, 1)]
        huge = with_theta(base, 50.0 * np.eye(2))
        none = with_theta(base, np.zeros((2, 2)))
        assert subproblem_cost(huge, priors, candidate, 1) == pytest.approx(
            subproblem_cost(none, priors, candidate, 1), rel=1e-12
        )

    def test_regularizer_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 3))
            h = int(rng.integers(0, 4))
            base = random_system(rng, n, m)
            theta = random_pd(rng, n, float(rng.uniform(0.01, 2.0)))
            sys_theta = with_theta(base, theta)
            sys_zero = with_theta(base, np.zeros((n, n)))
            priors = [random_policy(rng, n, m) for _ in range(h)]
            candidate = random_policy(rng, n, m)
            lam = base.a - candidate.b_l @ base.c - candidate.a_l
            reg = float(np.trace(lam.T @ lam @ theta))
            gap = subproblem_cost(sys_theta, priors, candidate, h) - subproblem_cost(
                sys_zero, priors, candidate, h
            )
            assert abs(gap - reg) <= 1e-10

    def test_cost_is_exact_quadratic_along_lines(self):
        rng = np.random.default_rng(12)
        sys1 = random_system(rng, 2, 2)
        priors = [random_policy(rng, 2, 2) for _ in range(2)]
        base = random_policy(rng, 2, 2)
        direction = rng.standard_normal(base.stacked.shape)

        def cost_at(s):
            return subproblem_cost(
                sys1, priors, FilterPolicy.from_stacked(base.stacked + s * direction), 2
            )

        # fit a quadratic through s = -1, 0, 1 and predict s = 2
        c_m1, c_0, c_1 = cost_at(-1.0), cost_at(0.0), cost_at(1.0)
        a2 = 0.5 * (c_1 + c_m1) - c_0
        a1 = 0.5 * (c_1 - c_m1)
        predicted = a2 * 4.0 + a1 * 2.0 + c_0
        assert cost_at(2.0) == pytest.approx(predicted, abs=1e-10 * max(1.0, abs(predicted)))

    def test_monte_carlo_equivalence(self):
        from rhpgkf import empirical_cost, substream

        rng = np.random.default_rng(13)
        sys1 = random_system(rng, 2, 1)
        priors = [random_policy(rng, 2, 1) for _ in range(2)]
        candidate = random_policy(rng, 2, 1)
        exact = subproblem_cost(sys1, priors, candidate, 2)
        mc, se = empirical_cost(sys1, priors, candidate, 2, 1_000_000, substream(99, 0))
        assert abs(mc - exact) <= 3.0 * se


class TestMinimizerRecovery:
    def test_exact_priors_recover_time_varying_gain(self):
        rng = np.random.default_rng(14)
        for h in (0, 1, 3):
            sys1 = random_system(rng, 3, 2)
            gains = time_varying_gains(sys1, h + 1)
            priors = kf_policy_sequence(sys1, gains[:h])
            kernel = gradient_kernel(sys1, propagate_moments(sys1, priors, h))
            pi_star = subproblem_minimizer(kernel)
            gain_h = gains[h][0]
            expected = np.hstack([sys1.a - gain_h @ sys1.c, gain_h])
            assert np.allclose(pi_star, expected, atol=1e-9)

    def test_perturbed_priors_recover_gain_form_to_first_order(self):
        # with inexact priors the minimizer matches the gain built from the
        # induced error covariance only up to O(perturbation)
        rng = np.random.default_rng(15)
        sys1 = random_system(rng, 2, 1)
        h = 3
        gains = time_varying_gains(sys1, h + 1)
        exact = kf_policy_sequence(sys1, gains[:h])
        for delta in (1e-3, 1e-5):
            priors = [
                FilterPolicy(
                    a_l=p.a_l + delta * rng.standard_normal(p.a_l.shape),
                    b_l=p.b_l + delta * rng.standard_normal(p.b_l.shape),
                )
                for p in exact
            ]
            state = propagate_moments(sys1, priors, h)
            kernel = gradient_kernel(sys1, state)
            pi_star = subproblem_minimizer(kernel)
            err_cov = (
                state.var_x - state.cov_x_xhat - state.cov_x_xhat.T + state.var_xhat
            )
            gain = (
                sys1.a
                @ err_cov
                @ sys1.c.T
                @ np.linalg.inv(sys1.v + sys1.c @ err_cov @ sys1.c.T)
            )
            gain_form = np.hstack([sys1.a - gain @ sys1.c, gain])
            assert np.linalg.norm(pi_star - gain_form) <= 100.0 * delta


class TestHessianKernel:
    def test_rank_one_degeneracy_without_injection(self):
        rng = np.random.default_rng(16)
        base = random_system(rng, 3, 1)
        sys0 = with_theta(base, np.zeros((3, 3)))
        kernel = gradient_kernel(sys0, initial_moments(sys0))
        with pytest.raises(LandscapeDegeneracyError) as excinfo:
            hessian_kernel(kernel)
        assert excinfo.value.lambda_min <= 1e-10

    def test_injection_restores_strong_convexity(self):
        rng = np.random.default_rng(17)
        sys1 = with_theta(random_system(rng, 3, 1), 0.01 * np.eye(3))
        info = hessian_kernel(gradient_kernel(sys1, initial_moments(sys1)))
        assert info.lambda_min > 0.0
        assert info.lambda_max >= info.lambda_min

    def test_scalar_example_eigenvalues(self):
        sys1 = scalar_system(v=0.1, theta=0.01)
        info = hessian_kernel(gradient_kernel(sys1, initial_moments(sys1)))
        assert np.allclose(info.matrix, [[2.02, 2.02], [2.02, 4.22]], atol=1e-14)
        trace, det = 6.24, 2.02 * 4.22 - 2.02**2
        lo = (trace - np.sqrt(trace**2 - 4 * det)) / 2.0
        hi = (trace + np.sqrt(trace**2 - 4 * det)) / 2.0
        assert info.lambda_min == pytest.approx(lo, rel=1e-12)
        assert info.lambda_max == pytest.approx(hi, rel=1e-12)

    def test_mean_based_variant_positive_definite(self):
        rng = np.random.default_rng(18)
        for h in (0, 2):
            sys1 = random_system(rng, 2, 2)
            policies = [random_policy(rng, 2, 2) for _ in range(h)]
            state = propagate_moments(sys1, policies, h)
            hess = mean_based_hessian(sys1, state)
            assert np.linalg.eigvalsh(hess).min() > 0.0
