# hjsolver/tests.py
import math
import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.optimize import brentq

from core.exceptions import DomainError, RegionError
from .models import RegionGeometry
from .services import (
    action, action_arrays, boundary_curves, connection_constant, logarithmic_profile,
    modulus_ratio, period, phase, region_index, region_indices, strip_membership,
    transverse_integral,
)


def random_interior_points(alpha, count, seed=7):
    rng = np.random.default_rng(seed)
    dx = period(alpha)
    x = rng.uniform(-0.5 * dx, 2.5 * dx, size=4 * count)
    y = rng.uniform(-alpha, alpha, size=4 * count)
    k = region_indices(x, y, alpha)
    keep = k >= 0
    return x[keep][:count], y[keep][:count]


class RegionIndexTest(unittest.TestCase):

    def test_origin(self):
        self.assertEqual(region_index(0.0, 0.0, 1.0), 0)

    def test_boundary_is_excluded(self):
        # sqrt(1 + 0.75^2) - 1 = 0.25 exactly in binary
        self.assertIsNone(region_index(0.75, 0.0, 0.25))

    def test_periodicity(self):
        for alpha in (0.5, 1.0, 1.66, 2.0):
            self.assertEqual(region_index(period(alpha), 0.0, alpha), 1)
            self.assertEqual(region_index(2 * period(alpha), 0.1 * alpha, alpha), 2)

    def test_outside_wall(self):
        self.assertIsNone(region_index(0.0, 1.01, 1.0))

    def test_vectorized_agrees(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 10, 500)
        y = rng.uniform(-1.2, 1.2, 500)
        k = region_indices(x, y, 0.8)
        expected = [region_index(a, b, 0.8) for a, b in zip(x, y)]
        self.assertEqual(list(k), [-1 if e is None else e for e in expected])

    def test_regions_disjoint(self):
        geometry = RegionGeometry(1.3)
        x, y = np.meshgrid(np.linspace(0, 3 * geometry.period, 301), np.linspace(-1.3, 1.3, 61))
        count = sum(geometry.contains(x, y, k).astype(int) for k in range(4))
        self.assertLessEqual(count.max(), 1)

    def test_cores_outside_every_region(self):
        for alpha in (0.3, 0.5, 1.0, 1.3, 1.66, 2.2):
            geometry = RegionGeometry(alpha)
            for core in geometry.cores(3):
                self.assertIsNone(region_index(core, 0.0, alpha), (alpha, core))
                self.assertEqual(int(region_indices(core, 0.0, alpha)), -1)
                self.assertFalse(any(geometry.contains(core, 0.0, k) for k in range(4)))

    def test_core_raises_in_action(self):
        for alpha in (1.0, 1.3):
            with self.assertRaises(RegionError):
                action(0.5 * period(alpha), 0.0, alpha)

    def test_cell_index(self):
        geometry = RegionGeometry(1.0)
        dx = geometry.period
        x = np.array([0.0, 0.49 * dx, 0.51 * dx, 1.6 * dx])
        self.assertEqual(list(geometry.cell_index(x)), [0, 0, 1, 2])
        assert_allclose(geometry.cores(2, start=1), [1.5 * dx, 2.5 * dx])

    def test_bad_alpha(self):
        with self.assertRaises(DomainError):
            region_index(0.0, 0.0, 0.0)

    def test_strip_membership_unbounded(self):
        far = np.array([0.0, 1e3, 1e6])
        self.assertTrue(np.all(strip_membership(np.full(3, 0.5), 1.0)))
        self.assertFalse(any(region_index(x, 0.5, 1.0) == 0 for x in far[1:]))
        self.assertFalse(strip_membership(1.0, 1.0))


class ActionTest(unittest.TestCase):

    def test_origin(self):
        result = action(0.0, 0.0, 1.0)
        self.assertEqual(result.sigma, 0)
        self.assertEqual(result.region_index, 0)

    def test_hamilton_jacobi_residual(self):
        for alpha in (0.4, 1.0, 1.6):
            x, y = random_interior_points(alpha, 10000 // 3)
            worst = max(action(a, b, alpha).residual for a, b in zip(x, y))
            self.assertLess(worst, 1e-12)

    def test_mixed_partials(self):
        h = 1e-4
        for x, y in ((0.3, 0.2), (0.9, -0.4), (period(1.0) + 0.2, 0.3)):
            d_sx_dy = (action(x, y + h, 1.0).grad[0] - action(x, y - h, 1.0).grad[0]) / (2 * h)
            d_sy_dx = (action(x + h, y, 1.0).grad[1] - action(x - h, y, 1.0).grad[1]) / (2 * h)
            self.assertLess(abs(d_sx_dy - d_sy_dx), h ** 2)

    def test_gradient_matches_finite_difference(self):
        h = 1e-5
        x, y = 0.6, 0.3
        sx = (action(x + h, y, 1.0).sigma - action(x - h, y, 1.0).sigma) / (2 * h)
        sy = (action(x, y + h, 1.0).sigma - action(x, y - h, 1.0).sigma) / (2 * h)
        grad = action(x, y, 1.0).grad
        self.assertLess(abs(sx - grad[0]), 1e-8)
        self.assertLess(abs(sy - grad[1]), 1e-8)

    def test_real_part_against_quadrature(self):
        for x in (0.2, 0.7, 1.2):
            expected, _ = quad(lambda t: math.sqrt(1 + t * t), 0.0, x, epsabs=1e-13, epsrel=1e-13)
            assert_allclose(action(x, 0.0, 1.0).sigma.real, expected, atol=1e-10)

    def test_boundary_condition_at_origin_line(self):
        for y in (-0.8, -0.1, 0.0, 0.5):
            self.assertEqual(action(0.0, y, 1.0).grad[0], complex(1.0, -y))

    def test_connection_constant_root(self):
        root = brentq(connection_constant, 1.2, 2.0, xtol=1e-14)
        self.assertAlmostEqual(root, 1.66, delta=0.01)

    def test_region_shift(self):
        alpha = 0.9
        inner = action(0.3, 0.2, alpha)
        shifted = action(0.3 + period(alpha), 0.2, alpha)
        assert_allclose(shifted.sigma - inner.sigma, connection_constant(alpha), atol=1e-13)

    def test_outside_raises(self):
        with self.assertRaises(RegionError):
            action(0.5 * period(1.0), 0.0, 1.0)

    def test_transverse_integral_closed_form(self):
        for alpha in (0.5, 1.0, 1.66, 2.0):
            expected, _ = quad(lambda e: math.sqrt(e * (2 + e)), 0.0, alpha, epsabs=1e-13, epsrel=1e-13)
            assert_allclose(transverse_integral(alpha), expected, atol=1e-10)


class ModulusTest(unittest.TestCase):

    def test_normalization(self):
        self.assertEqual(modulus_ratio(0.0, 1.0, 4.0), 1.0)

    def test_one_cyclotron_length(self):
        nu = 4.0
        assert_allclose(modulus_ratio(1.0, 1.0, nu),
                        math.exp(-nu * (math.sqrt(2.0) + math.asinh(1.0)) / 2), rtol=1e-14)
        assert_allclose(logarithmic_profile(1.0, nu), (1 + math.sqrt(2.0)) ** (-nu), rtol=1e-14)

    def test_strictly_decreasing(self):
        xs = np.linspace(0, 0.499 * period(1.0), 200)
        values = [modulus_ratio(x, 1.0, 4.0) for x in xs]
        self.assertTrue(all(b < a for a, b in zip(values, values[1:])))

    def test_drop_per_period(self):
        alpha, nu = 1.0, 4.0
        drop = modulus_ratio(period(alpha), alpha, nu)
        A = 4 * nu * (math.sqrt(alpha * (2 + alpha)) - transverse_integral(alpha))
        assert_allclose(drop, math.exp(-A / 2), rtol=1e-13)

    def test_independent_of_y(self):
        alpha, nu = 1.2, 5.0
        for x in (0.2, 0.9, period(alpha) + 0.4):
            ys = np.linspace(-0.5, 0.5, 41)
            sigma, k = action_arrays(np.full_like(ys, x), ys, alpha)
            self.assertTrue(np.all(k >= 0))
            modulus = np.exp(-nu * sigma.real)
            self.assertLess(modulus.max() - modulus.min(), 1e-12)


class PhaseTest(unittest.TestCase):

    def test_zero_on_axis(self):
        for x in (0.0, 0.4, period(1.0) + 0.3):
            self.assertEqual(phase(x, 0.0, 1.0, 4.0), 0.0)

    def test_odd_in_y(self):
        for x, y in ((0.3, 0.2), (0.8, 0.6), (period(1.0) - 0.2, 0.1)):
            assert_allclose(phase(x, y, 1.0, 4.0), -phase(x, -y, 1.0, 4.0), atol=1e-15)

    def test_transverse_derivative(self):
        h, nu = 1e-5, 4.0
        for x in (0.2, 0.7):
            dchi = (phase(x, h, 1.0, nu) - phase(x, -h, 1.0, nu)) / (2 * h)
            assert_allclose(dchi, nu * x, rtol=1e-8)


class BoundaryCurveTest(unittest.TestCase):

    def test_on_boundary(self):
        alpha = 0.7
        geometry = RegionGeometry(alpha)
        for k, xs, ys in boundary_curves(alpha, periods=3, points=101):
            assert_allclose(geometry.lhs(xs, ys, k)[1:-1], alpha ** 2, rtol=1e-9, atol=1e-12)
            self.assertAlmostEqual(xs[0], (k - 0.5) * geometry.period)

    def test_closed(self):
        for _, xs, ys in boundary_curves(1.0, periods=2):
            self.assertAlmostEqual(xs[0], xs[-1])
            self.assertAlmostEqual(ys[0], ys[-1])
