# effpot/tests.py
import math
import unittest
from dataclasses import replace

import numpy as np
from numpy.testing import assert_allclose

from core.exceptions import DomainError, ResolutionError
from core.models import GridSpec
from field.models import GridField
from field.services import assemble_field
from hjsolver.services import period
from oracle.services import build_problem, grid_for, solve_ground
from .models import EffectivePotentialProfile, HIGH_FIELD
from .services import (
    extract_U, finite_square_well_levels, high_field_potential, high_field_shift, level_coincidence,
    levels_1d, longitudinal_potential, piecewise_potential, reduced_high_field_potential,
    semiclassical_potential, sweep_well_depth,
)


class HighFieldPotentialTest(unittest.TestCase):

    def setUp(self):
        self.omega_c, self.a, self.l, self.x0 = 2.0, 1.5, 0.6, 0.1
        self.scale = self.omega_c ** 2 * self.a ** 2 / 4.0
        self.stretch = 2.0 * self.l ** 2 / self.a

    def evaluate(self, x):
        return high_field_potential(np.array([x]), self.omega_c, self.a, self.l, self.x0).U[0]

    def test_zero_where_tangent_is_minus_inverse_root_three(self):
        x = self.x0 - (math.pi / 6.0) * self.stretch
        self.assertAlmostEqual(self.evaluate(x), 0.0, places=12)

    def test_scale_where_tangent_vanishes(self):
        self.assertAlmostEqual(self.evaluate(self.x0), self.scale, places=12)

    def test_pole_train(self):
        x = np.linspace(-5.0, 5.0, 2001)
        profile = high_field_potential(x, self.omega_c, self.a, self.l, self.x0)
        self.assertEqual(profile.variant, HIGH_FIELD)
        self.assertGreaterEqual(len(profile.singular_points), 3)
        assert_allclose(np.diff(profile.singular_points), 2.0 * math.pi * self.l ** 2 / self.a)

    def test_poles_are_masked(self):
        pole = self.x0 + math.pi * self.l ** 2 / self.a
        profile = high_field_potential(np.array([pole - 0.3, pole, pole + 0.3]),
                                       self.omega_c, self.a, self.l, self.x0)
        self.assertEqual(list(profile.masked), [False, True, False])

    def test_shift_places_pole_on_vortex(self):
        vortex = 1.7
        x0 = high_field_shift(vortex, self.a, self.l)
        profile = high_field_potential(np.linspace(0.0, 3.0, 301), self.omega_c, self.a, self.l, x0)
        self.assertTrue(any(abs(p - vortex) < 1e-12 for p in profile.singular_points))

    def test_reduced_form(self):
        alpha, nu = 1.0, 4.0
        profile = reduced_high_field_potential(np.array([0.0]), alpha, nu, 0.0)
        self.assertAlmostEqual(profile.U[0], alpha ** 2 / 2.0, places=12)
        self.assertAlmostEqual(profile.kinetic, 1.0 / nu ** 2)

    def test_rejects_non_positive_length(self):
        with self.assertRaises(DomainError):
            high_field_potential(np.zeros(3), 1.0, 1.0, 0.0, 0.0)


class LevelFinderTest(unittest.TestCase):

    def test_harmonic_levels(self):
        nu = 4.0
        x = np.linspace(-6.0, 6.0, 2001)
        profile = EffectivePotentialProfile(x=x, U=x ** 2, variant='harmonic', kinetic=1.0 / nu ** 2)
        levels = levels_1d(profile, (0.0, 2.0))
        expected = [(k + 0.5) * 2.0 / nu for k in range(4)]
        self.assertEqual(len(levels), 4)
        assert_allclose(levels, expected, rtol=5e-3)

    def test_square_well_matches_matching_conditions(self):
        h = 5e-4
        x = -15.0 + (np.arange(60000) + 0.5) * h
        profile = EffectivePotentialProfile(x=x, U=np.where(np.abs(x) < 1.0, -2.0, 0.0),
                                            variant='square')
        numeric = levels_1d(profile, (-2.0, 0.0))
        exact = finite_square_well_levels(2.0, 2.0)
        self.assertEqual(len(exact), 1)
        self.assertEqual(len(numeric), len(exact))
        assert_allclose(numeric, exact, atol=1e-6)

    def test_square_well_counts_odd_states(self):
        # z0 = 2.5 admits one even and one odd state
        levels = finite_square_well_levels(6.25, 2.0)
        self.assertEqual(len(levels), 2)
        self.assertTrue(all(-6.25 < value < 0.0 for value in levels))

    def test_empty_window(self):
        x = np.linspace(-1.0, 1.0, 11)
        profile = EffectivePotentialProfile(x=x, U=x ** 2, variant='harmonic')
        self.assertEqual(levels_1d(profile, (1.0, 1.0)), [])
        self.assertEqual(levels_1d(profile, (-5.0, -4.0)), [])

    def test_masked_samples_are_bridged(self):
        nu = 4.0
        x = np.linspace(-6.0, 6.0, 2001)
        U = x ** 2
        U[1000] = np.nan
        profile = EffectivePotentialProfile(x=x, U=U, variant='harmonic', kinetic=1.0 / nu ** 2)
        assert_allclose(levels_1d(profile, (0.0, 1.0))[0], 0.25, rtol=5e-3)

    def test_deepening_never_raises_levels(self):
        shallow = levels_1d(piecewise_potential(1.0, 4.0, depth=1.0), (-10.0, 4.0))
        deep = levels_1d(piecewise_potential(1.0, 4.0, depth=3.0), (-10.0, 4.0))
        count = min(len(shallow), len(deep))
        self.assertGreater(count, 0)
        self.assertTrue(np.all(np.array(deep[:count]) <= np.array(shallow[:count]) + 1e-12))


class PiecewiseModelTest(unittest.TestCase):

    def test_parabolas_centred_on_regions(self):
        dx = period(1.0)
        profile = semiclassical_potential(1.0, np.array([0.0, dx, 2 * dx, 0.4 * dx, 1.4 * dx]))
        assert_allclose(profile.U, [0.0, 0.0, 0.0, (0.4 * dx) ** 2, (0.4 * dx) ** 2], atol=1e-12)
        assert_allclose(profile.singular_points, [0.5 * dx, 1.5 * dx], rtol=1e-14)

    def test_wells_on_cores(self):
        alpha, nu = 1.0, 4.0
        profile = piecewise_potential(alpha, nu, depth=2.0, periods=3)
        self.assertEqual(len(profile.singular_points), 2)
        core = profile.singular_points[0]
        self.assertEqual(profile.U[np.argmin(np.abs(profile.x - core))], -2.0)
        self.assertAlmostEqual(core, 0.5 * period(alpha))

    def test_default_depth(self):
        profile = piecewise_potential(1.5, 4.0)
        self.assertAlmostEqual(np.min(profile.U), -2.0 * 1.5 ** 2)

    def test_under_resolved_wells(self):
        with self.assertRaises(ResolutionError):
            piecewise_potential(1.0, 40.0, points=200)

    def test_crossings_fire_once_per_level(self):
        sweep = sweep_well_depth(1.0, 4.0, np.linspace(0.0, 12.0, 7), periods=2)
        self.assertEqual(len(sweep.crossings), sweep.counts[-1] - sweep.counts[0])
        self.assertGreater(len(sweep.crossings), 0)
        self.assertTrue(np.all(np.diff(sweep.counts) >= 0))
        for depth in sweep.crossings:
            levels = levels_1d(piecewise_potential(1.0, 4.0, depth, periods=2), (-1.0 - 1e-4, -1.0 + 1e-4))
            self.assertEqual(len(levels), 1)

    def test_level_coincidence(self):
        self.assertTrue(level_coincidence([-2.0, -1.01, 0.5], tolerance=0.02)['coincident'])
        result = level_coincidence([-2.0, 0.5], tolerance=0.02)
        self.assertFalse(result['coincident'])
        self.assertEqual(result['nearest'], -2.0)
        self.assertIsNone(level_coincidence([])['nearest'])


class ExtractionTest(unittest.TestCase):

    def test_pure_exponential_gives_zero(self):
        nu = 4.0
        x = np.linspace(0.0, 3.0, 3001)
        U = longitudinal_potential(x, np.exp(-nu * x), -1.0, nu)
        assert_allclose(U[2:-2], 0.0, atol=1e-6)
        self.assertTrue(np.isnan(U[0]) and np.isnan(U[-1]))

    def test_semiclassical_field_gives_parabolas(self):
        alpha = 1.0
        grid = GridSpec(nx=200, ny=100, x_max=2.25 * period(alpha), y_max=1.3 * alpha)
        extraction = extract_U(assemble_field(grid, alpha, 4.0))
        U = extraction.transverse.U
        finite = np.isfinite(U)
        self.assertGreater(finite.sum(), grid.nx // 2)
        expected = semiclassical_potential(alpha, grid.x_nodes()).U
        assert_allclose(U[finite], expected[finite], atol=1e-8)

    def test_node_deep_in_tail_keeps_neighbours(self):
        # node at x = 5 where |psi| is ~1e-17 of its peak
        grid = GridSpec(nx=200, ny=40, x_max=6.0, y_max=1.0)
        X, Y = grid.mesh()
        psi = np.exp(-8.0 * X) * ((X - 5.0) + 1j * Y)
        field = GridField(grid=grid, psi=psi, region=np.zeros(grid.shape, dtype=int),
                          valid=np.ones(grid.shape, dtype=bool), alpha=1.0, nu=4.0, source='oracle')
        profile = extract_U(field).transverse
        assert_allclose(profile.singular_points, [5.0], atol=0.01)
        near = (np.abs(profile.x - 5.0) < 0.25) & ~profile.masked
        self.assertGreater(near.sum(), 4)
        self.assertTrue(np.all(np.isfinite(profile.U[near])))

    def test_under_resolved_stencil(self):
        grid = GridSpec(nx=40, ny=6, x_max=2.25 * period(1.0), y_max=1.3)
        with self.assertRaises(ResolutionError) as caught:
            extract_U(assemble_field(grid, 1.0, 4.0))
        self.assertEqual(caught.exception.axis, 'y')


class OracleExtractionTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        grid = grid_for(1.0, 4.0, 4, nx=192, ny=128)
        cls.solution = solve_ground(build_problem(4.0, 1.0, 50.0, 4, grid, check=False))
        cls.field = cls.solution.grid_field()
        cls.extraction = extract_U(cls.field, cls.solution.eigenvalue)

    def test_variants_agree_away_from_nodes(self):
        x = self.extraction.transverse.x
        window = (x > 0.2) & (x < 1.0)
        transverse = self.extraction.transverse.U[window]
        longitudinal = self.extraction.longitudinal.U[window]
        self.assertTrue(np.all(np.isfinite(transverse)) and np.all(np.isfinite(longitudinal)))
        self.assertLess(np.median(np.abs(transverse - longitudinal)), 0.05)

    def test_positive_at_density_maximum(self):
        self.assertGreater(self.extraction.transverse.U[1], 0.0)

    def test_nodes_are_masked(self):
        profile = self.extraction.transverse
        self.assertGreater(len(profile.singular_points), 0)
        for node in profile.singular_points:
            nearest = np.argmin(np.abs(profile.x - node))
            self.assertTrue(profile.masked[nearest])

    def test_negative_beside_nodes(self):
        profile = self.extraction.transverse
        delta = 1.0 / (1.0 * 4.0)
        for node in profile.singular_points:
            near = (np.abs(profile.x - node) < delta) & ~profile.masked
            self.assertTrue(near.any())
            self.assertLess(np.min(profile.U[near]), 0.0)

    def test_real_profile(self):
        self.assertEqual(self.extraction.transverse.U.dtype, np.float64)

    def test_insensitive_to_odd_perturbation(self):
        y = self.field.y
        perturbed = replace(self.field, psi=self.field.psi * (1.0 + 0.1 * y)[None, :])
        U = extract_U(perturbed, self.solution.eigenvalue).transverse.U
        assert_allclose(U, self.extraction.transverse.U, rtol=1e-8, atol=1e-8, equal_nan=True)

    def test_mirror_image(self):
        mirrored = replace(self.field, psi=self.field.psi[:, ::-1].copy())
        U = extract_U(mirrored, self.solution.eigenvalue).transverse.U
        assert_allclose(U, self.extraction.transverse.U, rtol=1e-8, atol=1e-8, equal_nan=True)
