"""Stein update rules: vector steps, matrix kernels, bandwidths.

The matrix-kernel gradient is validated against finite differences taken
with respect to the second argument, perturbing one coordinate of every
row at once (the gradient rows are sums over all rows of that argument).
"""

import math

import numpy as np
import pytest

from steinfeatures import (
    AdaGradScaler,
    SteinKernelConfig,
    matrix_kernel,
    matrix_kernel_grad,
    median_bandwidth,
    resolve_bandwidth,
    svgd_step,
)
from steinfeatures.errors import ConfigurationError


class TestSteinKernelConfig:
    def test_accepts_median_and_positive_floats(self):
        assert SteinKernelConfig().bandwidth == "median"
        assert SteinKernelConfig(bandwidth=2.5).bandwidth == 2.5

    def test_rejects_bad_bandwidths(self):
        for bad in ("mean", 0.0, -1.0):
            with pytest.raises(ConfigurationError):
                SteinKernelConfig(bandwidth=bad)


class TestMedianBandwidth:
    def test_two_point_hand_value(self):
        """Points {0, 2}: the only distance is 2, so h = 4 / log(3)."""
        h = median_bandwidth(np.array([[0.0], [2.0]]))
        assert h == pytest.approx(4.0 / math.log(3.0), rel=1e-15)

    def test_coincident_points_fall_back_to_one(self):
        assert median_bandwidth(np.zeros((4, 2))) == 1.0

    def test_single_point_falls_back_to_one(self):
        assert median_bandwidth(np.array([[3.0, 1.0]])) == 1.0

    def test_quadratic_scaling(self):
        """Doubling the point set doubles the median, quadrupling h."""
        rng = np.random.default_rng(5)
        points = rng.standard_normal((6, 3))
        assert median_bandwidth(2.0 * points) == pytest.approx(
            4.0 * median_bandwidth(points), rel=1e-12
        )

    def test_resolve_bandwidth(self):
        points = np.array([[0.0], [2.0]])
        assert resolve_bandwidth(SteinKernelConfig(bandwidth=7.0), points) == 7.0
        assert resolve_bandwidth(
            SteinKernelConfig(), points
        ) == median_bandwidth(points)


class TestSvgdStep:
    def test_two_particle_hand_expansion(self):
        """Particles (+1, -1), score -omega, h=1, eps=0.1.

        kappa off-diagonal is e^-4; drive on +1 is (-1 + e^-4)/2 and the
        repulsion is 2 e^-4, so the update is 1 + 0.1(-1/2 + 2.5 e^-4).
        """
        particles = np.array([[1.0], [-1.0]])
        out = svgd_step(
            particles, -particles, 0.1, SteinKernelConfig(bandwidth=1.0)
        )
        expected = 1.0 + 0.1 * (-0.5 + 2.5 * math.exp(-4.0))
        np.testing.assert_allclose(out, [[expected], [-expected]], rtol=1e-15)

    def test_fixed_point_at_zero_scores_and_coincident_particles(self):
        particles = np.ones((3, 2))
        out = svgd_step(particles, np.zeros((3, 2)), 0.5)
        np.testing.assert_array_equal(out, particles)

    def test_preserves_antisymmetry(self):
        """A sign-symmetric set with an odd score field stays symmetric."""
        particles = np.array([[1.5], [-1.5]])
        for _ in range(50):
            particles = svgd_step(particles, -particles, 0.05)
        assert particles[0, 0] == -particles[1, 0]

    def test_repulsion_separates_coincident_particles_with_offset_scores(self):
        """Identical particles under equal scores move identically; the
        kernel gradient term only acts once they differ."""
        particles = np.zeros((2, 1))
        scores = np.array([[1.0], [1.0]])
        out = svgd_step(particles, scores, 0.1, SteinKernelConfig(bandwidth=1.0))
        np.testing.assert_allclose(out, 0.1 * np.ones((2, 1)))

    def test_shape_mismatch_raises(self):
        with pytest.raises(ConfigurationError):
            svgd_step(np.zeros((2, 1)), np.zeros((3, 1)), 0.1)

    def test_nonfinite_raises(self):
        with pytest.raises(ConfigurationError):
            svgd_step(np.array([[np.nan]]), np.array([[0.0]]), 0.1)


class TestMatrixKernel:
    def test_hand_values(self):
        """Rows (0,1) against rows (0,2) at h=1."""
        a = np.array([[0.0], [1.0]])
        b = np.array([[0.0], [2.0]])
        kern = matrix_kernel(a, b, SteinKernelConfig(bandwidth=1.0))
        np.testing.assert_allclose(
            kern,
            [[1.0, math.exp(-4.0)], [math.exp(-1.0), math.exp(-1.0)]],
            rtol=1e-15,
        )

    def test_transpose_symmetry(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((4, 2))
        b = rng.standard_normal((4, 2))
        config = SteinKernelConfig(bandwidth=2.0)
        np.testing.assert_allclose(
            matrix_kernel(a, b, config), matrix_kernel(b, a, config).T, rtol=1e-15
        )

    def test_median_rule_pools_both_arguments(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((3, 2))
        b = rng.standard_normal((3, 2)) + 5.0
        pooled_h = median_bandwidth(np.vstack([a, b]))
        np.testing.assert_array_equal(
            matrix_kernel(a, b),
            matrix_kernel(a, b, SteinKernelConfig(bandwidth=pooled_h)),
        )

    def test_unit_diagonal_against_itself(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((5, 3))
        np.testing.assert_array_equal(np.diag(matrix_kernel(a, a)), np.ones(5))

    def test_shape_mismatch_raises(self):
        with pytest.raises(ConfigurationError):
            matrix_kernel(np.zeros((2, 2)), np.zeros((3, 2)))


class TestMatrixKernelGrad:
    def test_hand_values(self):
        """Same rows as the kernel hand case; the second row cancels."""
        a = np.array([[0.0], [1.0]])
        b = np.array([[0.0], [2.0]])
        grad = matrix_kernel_grad(a, b, SteinKernelConfig(bandwidth=1.0))
        np.testing.assert_allclose(
            grad, [[-4.0 * math.exp(-4.0)], [0.0]], rtol=1e-15, atol=1e-18
        )

    @pytest.mark.parametrize("r,d", [(1, 1), (2, 3), (4, 2)])
    def test_matches_finite_differences(self, r, d):
        """Row i holds sum_j of the kernel's gradient in b_j, so nudging
        one coordinate of every row of b probes exactly one column."""
        rng = np.random.default_rng(100 + r + d)
        a = rng.standard_normal((r, d))
        b = rng.standard_normal((r, d))
        config = SteinKernelConfig(bandwidth=1.7)
        grad = matrix_kernel_grad(a, b, config)
        step = 1e-6
        for k in range(d):
            bump = np.zeros_like(b)
            bump[:, k] = step
            fd = (
                matrix_kernel(a, b + bump, config).sum(axis=1)
                - matrix_kernel(a, b - bump, config).sum(axis=1)
            ) / (2.0 * step)
            np.testing.assert_allclose(grad[:, k], fd, rtol=1e-6, atol=1e-9)

    def test_vanishes_for_identical_point_sets_with_mirror_symmetry(self):
        """a == b symmetric around 0 in 1-d gives cancelling pulls."""
        a = np.array([[-1.0], [1.0]])
        grad = matrix_kernel_grad(a, a, SteinKernelConfig(bandwidth=1.0))
        np.testing.assert_allclose(grad, [[-grad[1, 0]], [grad[1, 0]]], rtol=1e-15)


class TestAdaGradScaler:
    def test_first_call_normalizes_to_near_unit(self):
        scaler = AdaGradScaler()
        out = scaler.scale(np.array([4.0, -9.0]))
        np.testing.assert_allclose(
            out, [4.0 / (1e-6 + 4.0), -9.0 / (1e-6 + 9.0)], rtol=1e-15
        )

    def test_accumulator_decays(self):
        scaler = AdaGradScaler(decay=0.9)
        scaler.scale(np.array([4.0]))
        out = scaler.scale(np.array([4.0]))
        # accumulator stays 16, so the scale is unchanged
        np.testing.assert_allclose(out, [4.0 / (1e-6 + 4.0)], rtol=1e-15)
        out = scaler.scale(np.array([0.0]))
        assert out[0] == 0.0

    def test_zero_history_gives_zero_step(self):
        scaler = AdaGradScaler()
        out = scaler.scale(np.zeros(3))
        np.testing.assert_array_equal(out, np.zeros(3))
