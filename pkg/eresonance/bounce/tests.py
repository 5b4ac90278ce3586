# bounce/tests.py
import math
import time
import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy.integrate import quad

from core.exceptions import DomainError, NoBounceError
from core.models import PhysicalSetup
from core.services import derive_dimensionless
from hjsolver.services import connection_constant, modulus_ratio, period, transverse_integral
from .services import (
    action_along_field, bounce_action, find_alpha_R, hard_wall_action, integral_ratio,
    integrate_bounce, near_resonance_ratio, resonance_coefficient, resonance_field,
    resonance_roots, turning_point,
)


class HardWallActionTest(unittest.TestCase):

    def test_decomposition(self):
        for alpha in (0.3, 1.0, 1.5):
            result = hard_wall_action(alpha, 4.0)
            assert_allclose(result.total, result.a_wkb - result.transverse, rtol=1e-12)
            assert_allclose(result.total, result.a_wkb * (1 - integral_ratio(alpha)), rtol=1e-12)

    def test_bounds_below_resonance(self):
        alpha_R = find_alpha_R()
        for alpha in np.linspace(0.05, alpha_R, 30):
            result = hard_wall_action(alpha, 6.0)
            self.assertGreaterEqual(result.total, -1e-12)
            self.assertLessEqual(result.total, result.a_wkb)

    def test_small_alpha(self):
        alpha = 1e-4
        result = hard_wall_action(alpha, 3.0)
        assert_allclose(result.transverse, 4 * 3.0 * (2 * math.sqrt(2) / 3) * alpha ** 1.5, rtol=1e-3)
        self.assertLess(integral_ratio(alpha), 1e-3)

    def test_closed_form_against_quadrature(self):
        start = time.perf_counter()
        for alpha in np.linspace(0.1, 4.0, 20):
            expected, _ = quad(lambda e: math.sqrt(e * (2 + e)), 0.0, alpha, epsabs=1e-14, epsrel=1e-14)
            assert_allclose(transverse_integral(alpha), expected, atol=1e-10)
        self.assertLess(time.perf_counter() - start, 1.0)

    def test_relative_action_independent_of_nu(self):
        for alpha in (0.4, 1.1):
            ratios = [hard_wall_action(alpha, nu).relative for nu in (1.0, 4.0, 50.0)]
            assert_allclose(ratios, ratios[0], rtol=1e-13)

    def test_suppression_increases_along_field(self):
        alpha_R = find_alpha_R()
        kappa = 4.0
        values = [action_along_field(alpha, kappa).suppression
                  for alpha in np.linspace(0.05, alpha_R, 60)]
        self.assertTrue(all(b > a for a, b in zip(values, values[1:])))

    def test_drop_per_period_matches_modulus(self):
        result = hard_wall_action(1.0, 4.0)
        assert_allclose(modulus_ratio(period(1.0), 1.0, 4.0), math.exp(-result.total / 2), rtol=1e-12)

    def test_rejects_nonpositive_alpha(self):
        with self.assertRaises(DomainError):
            hard_wall_action(0.0, 4.0)


class ResonanceTest(unittest.TestCase):

    def test_alpha_R(self):
        start = time.perf_counter()
        alpha_R = find_alpha_R(1e-13)
        self.assertLess(time.perf_counter() - start, 1.0)
        self.assertAlmostEqual(alpha_R, 1.66, delta=0.01)
        self.assertLess(abs(integral_ratio(alpha_R) - 1.0), 1e-10)
        self.assertLess(abs(connection_constant(alpha_R)), 1e-10)

    def test_roots_agree(self):
        from_ratio, from_constant = resonance_roots(1e-13)
        self.assertLess(abs(from_ratio - from_constant), 1e-10)

    def test_ratio_increasing(self):
        self.assertLess(integral_ratio(1.0), integral_ratio(1.66))
        self.assertLess(integral_ratio(1.66), integral_ratio(2.0))
        samples = [integral_ratio(a) for a in np.linspace(0.01, 4.0, 200)]
        self.assertTrue(all(b > a for a, b in zip(samples, samples[1:])))

    def test_period_in_wall_units(self):
        alpha_R = find_alpha_R()
        self.assertAlmostEqual(period(alpha_R) / alpha_R, 2.97, delta=0.01)

    def test_coefficient(self):
        coefficient = resonance_coefficient()
        self.assertAlmostEqual(coefficient.value, 0.94, delta=0.01)
        assert_allclose(coefficient.value, coefficient.closed_form, rtol=1e-12)
        self.assertLess(abs(coefficient.value - coefficient.finite_difference), 1e-6)

    def test_field_scaling(self):
        setup = PhysicalSetup(energy=1.0, mass=1.0, charge=1.0, a=2.0, H=0.0, u0=10.0, N=2)
        H_R = resonance_field(setup)
        assert_allclose(resonance_field(PhysicalSetup(4.0, 1.0, 1.0, 2.0, 0.0, 10.0, 2)), 2 * H_R, rtol=1e-14)
        assert_allclose(resonance_field(PhysicalSetup(1.0, 1.0, 1.0, 4.0, 0.0, 10.0, 2)), H_R / 2, rtol=1e-14)
        assert_allclose(derive_dimensionless(setup.with_field(H_R)).alpha, find_alpha_R(), atol=1e-10)

    def test_field_in_two_unit_systems(self):
        from core.models import CGS_ELECTRON_CHARGE, CGS_ELECTRON_MASS, UnitSystem
        cgs = UnitSystem.cgs()
        atomic = UnitSystem.atomic()
        hartree = CGS_ELECTRON_MASS * CGS_ELECTRON_CHARGE ** 4 / cgs.hbar ** 2
        bohr = cgs.hbar ** 2 / (CGS_ELECTRON_MASS * CGS_ELECTRON_CHARGE ** 2)
        # Gaussian atomic unit of field, e/a0^2
        field_unit = CGS_ELECTRON_CHARGE / bohr ** 2
        energy_au, a_au = 0.004, 100.0
        in_cgs = resonance_field(PhysicalSetup(energy_au * hartree, CGS_ELECTRON_MASS, CGS_ELECTRON_CHARGE,
                                               a_au * bohr, 0.0, 1.0, 2, cgs.hbar, cgs.c))
        in_atomic = resonance_field(PhysicalSetup(energy_au, 1.0, 1.0, a_au, 0.0, 1.0, 2, 1.0, atomic.c))
        assert_allclose(in_cgs, in_atomic * field_unit, rtol=1e-10)


class NearResonanceTest(unittest.TestCase):

    def test_at_resonance(self):
        result = near_resonance_ratio(find_alpha_R(), 8.0, 1)
        self.assertEqual(result.linearized, 1.0)
        self.assertFalse(result.in_window)

    def test_first_order_agreement(self):
        alpha_R = find_alpha_R()
        mismatches = []
        epsilons = np.logspace(-4, -2, 5)
        for eps in epsilons:
            result = near_resonance_ratio(alpha_R * (1 - eps), 50.0, 2)
            exact = -math.log(result.exact)
            linear = -math.log(result.linearized)
            mismatches.append(abs(exact - linear) / exact)
        # mismatch scales like eps
        slopes = np.diff(np.log(mismatches)) / np.diff(np.log(epsilons))
        assert_allclose(slopes, 1.0, atol=0.1)
        self.assertLess(mismatches[0], 1e-3)

    def test_window_flags(self):
        alpha_R = find_alpha_R()
        self.assertTrue(near_resonance_ratio(alpha_R * 0.9, 100.0, 1).in_window)
        self.assertIn('detuning_below_semiclassical_width',
                      near_resonance_ratio(alpha_R * 0.999, 4.0, 1).flags)
        self.assertIn('detuning_not_small', near_resonance_ratio(0.5, 100.0, 1).flags)

    def test_rejects_bad_period_count(self):
        with self.assertRaises(DomainError):
            near_resonance_ratio(1.0, 4.0, 0)


class BounceTest(unittest.TestCase):

    def test_turning_point_at_wall(self):
        alpha = 0.8
        for N in (1, 3, 8):
            assert_allclose(turning_point(alpha, alpha * (2 + alpha), N), alpha, rtol=1e-13)

    def test_turning_point_moves_inward_with_strength(self):
        points = [turning_point(1.0, w, 8) for w in (10.0, 100.0, 1000.0)]
        self.assertTrue(points[0] > points[1] > points[2])

    def test_hard_wall_limit_in_exponent(self):
        start = time.perf_counter()
        alpha, nu, w = 1.0, 4.0, 1000.0
        target = hard_wall_action(alpha, nu).transverse
        errors = [abs(bounce_action(alpha, nu, w, N)[0] - target) / target for N in (8, 32, 128, 512)]
        self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])))
        self.assertLess(errors[-1], 0.02)
        self.assertLess(time.perf_counter() - start, 10.0)

    def test_routes_agree(self):
        for alpha, w, N in ((1.0, 50.0, 4), (0.6, 5.0, 2), (1.5, 200.0, 8)):
            result = integrate_bounce(alpha, 4.0, w, N)
            assert_allclose(result.transverse_action_ivp, result.transverse_action, rtol=1e-6)
            _, period_quad, _ = bounce_action(alpha, 4.0, w, N)
            assert_allclose(result.period, period_quad, rtol=1e-6)

    def test_trajectory(self):
        result = integrate_bounce(1.0, 4.0, 50.0, 4)
        self.assertLess(result.energy_residual, 1e-8)
        self.assertTrue(np.all(result.eta >= -1e-12))
        self.assertAlmostEqual(result.eta[0], result.eta[-1], places=10)
        assert_allclose(result.eta.max(), result.turning_point, rtol=1e-8)
        assert_allclose(result.total_action, result.a_wkb - result.transverse_action)

    def test_weak_wall_does_not_bounce(self):
        with self.assertRaises(NoBounceError):
            integrate_bounce(1.0, 4.0, 1e-6, 1)

    def test_rejects_bad_exponent(self):
        with self.assertRaises(DomainError):
            bounce_action(1.0, 4.0, 10.0, 0)
