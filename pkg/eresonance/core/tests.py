# core/tests.py
import math
import unittest

from numpy.testing import assert_allclose

from .exceptions import DomainError, FlatFieldError
from .models import GridSpec, PhysicalSetup, UnitSystem, CGS_ELECTRON_CHARGE, CGS_ELECTRON_MASS
from .services import (
    derive_dimensionless, field_for_alpha, reduced, restore_setup, validate, validate_reduced,
)


def natural_setup(**overrides):
    values = dict(energy=2.0, mass=1.0, charge=1.0, a=3.0, H=0.5, u0=100.0, N=2)
    values.update(overrides)
    return PhysicalSetup(**values)


class DeriveDimensionlessTest(unittest.TestCase):

    def test_flux_count_identity(self):
        for H in (0.01, 0.3, 1.7, 42.0):
            dim = derive_dimensionless(natural_setup(H=H))
            assert_allclose(dim.flux_count, dim.alpha ** 2 * dim.nu / math.pi, rtol=1e-14)

    def test_core_scale_and_period(self):
        dim = derive_dimensionless(natural_setup())
        assert_allclose(dim.core_scale, 1.0 / (dim.alpha * dim.nu), rtol=1e-15)
        assert_allclose(dim.period, 2.0 * math.sqrt(dim.alpha * (2.0 + dim.alpha)), rtol=1e-15)
        # l^2/a in physical units
        assert_allclose(dim.core_scale_physical, dim.magnetic_length ** 2 / 3.0, rtol=1e-13)

    def test_doubling_field(self):
        one = derive_dimensionless(natural_setup(H=0.4))
        two = derive_dimensionless(natural_setup(H=0.8))
        assert_allclose(two.alpha, 2.0 * one.alpha, rtol=1e-14)
        assert_allclose(two.nu, 0.5 * one.nu, rtol=1e-14)

    def test_alpha_increases_with_field(self):
        alphas = [derive_dimensionless(natural_setup(H=H)).alpha for H in (0.1, 0.2, 0.5, 1.0, 3.0)]
        self.assertTrue(all(b > a for a, b in zip(alphas, alphas[1:])))

    def test_period_in_wall_units_at_resonance_alpha(self):
        alpha = 1.66
        self.assertAlmostEqual(2.0 * math.sqrt(alpha * (2.0 + alpha)) / alpha, 2.97, delta=0.01)

    def test_all_positive(self):
        dim = derive_dimensionless(natural_setup())
        for value in (dim.alpha, dim.nu, dim.flux_count, dim.cyclotron_length,
                      dim.magnetic_length, dim.period, dim.core_scale, dim.wall_energy_ratio):
            self.assertGreater(value, 0)

    def test_flat_field(self):
        with self.assertRaises(FlatFieldError):
            derive_dimensionless(natural_setup(H=0.0))

    def test_nonpositive_inputs_name_field(self):
        for name in ('energy', 'mass', 'charge', 'a', 'u0'):
            with self.assertRaises(DomainError) as ctx:
                derive_dimensionless(natural_setup(**{name: -1.0}))
            self.assertEqual(ctx.exception.field, name)
        with self.assertRaises(DomainError) as ctx:
            derive_dimensionless(natural_setup(N=0))
        self.assertEqual(ctx.exception.field, 'N')

    def test_round_trip(self):
        setup = natural_setup(energy=0.7, mass=1.3, charge=0.9, a=2.1, H=0.35, u0=12.0, N=3)
        back = restore_setup(derive_dimensionless(setup), 0.7, 1.3, 0.9)
        for name in ('energy', 'mass', 'charge', 'a', 'H', 'u0', 'N'):
            assert_allclose(getattr(back, name), getattr(setup, name), rtol=1e-12)

    def test_round_trip_cgs(self):
        units = UnitSystem.cgs()
        energy = 0.1 * 1.602176634e-12  # 0.1 eV in erg
        setup = PhysicalSetup(energy, CGS_ELECTRON_MASS, CGS_ELECTRON_CHARGE, 5e-7, 1e5,
                              5.0 * energy, 4, units.hbar, units.c)
        back = restore_setup(derive_dimensionless(setup), energy, CGS_ELECTRON_MASS,
                             CGS_ELECTRON_CHARGE, units.hbar, units.c)
        assert_allclose(back.a, setup.a, rtol=1e-12)
        assert_allclose(back.H, setup.H, rtol=1e-12)

    def test_field_for_alpha_inverts(self):
        setup = natural_setup()
        H = field_for_alpha(setup, 1.25)
        assert_allclose(derive_dimensionless(setup.with_field(H)).alpha, 1.25, rtol=1e-13)

    def test_reduced_matches_physical(self):
        dim = derive_dimensionless(natural_setup())
        red = reduced(dim.alpha, dim.nu, 50.0, 2)
        assert_allclose(red.flux_count, dim.flux_count, rtol=1e-13)
        assert_allclose(red.magnetic_length, dim.magnetic_length / dim.cyclotron_length, rtol=1e-13)


class ValidateTest(unittest.TestCase):

    def test_kinetic_margin(self):
        # hbar^2/(m a^2 |E|) = 1e-3
        setup = natural_setup(energy=1.0, a=math.sqrt(1e3))
        check = validate(setup).get('kinetic')
        self.assertEqual(check.status, 'pass')
        assert_allclose(check.margin, 1e3, rtol=1e-12)

    def test_wall_exponent_equal_flux_count_warns(self):
        # alpha^2 nu / pi = N
        report = validate_reduced(alpha=math.sqrt(math.pi), nu=2.0, N=2)
        self.assertEqual(report.get('wall_exponent').status, 'warn')

    def test_magnetic_length_ratio_warns(self):
        # l/a = 1/(alpha sqrt(nu)) = 0.9
        report = validate_reduced(alpha=1.0 / 0.9, nu=1.0, N=1)
        check = report.get('magnetic_length')
        assert_allclose(check.ratio, 0.9, rtol=1e-14)
        self.assertEqual(check.status, 'warn')
        self.assertIn('magnetic_length', [item.name for item in report.warnings])

    def test_reduced_agrees_with_physical(self):
        setup = natural_setup()
        dim = derive_dimensionless(setup)
        physical = validate(setup)
        red = validate_reduced(dim.alpha, dim.nu, setup.N)
        for name in ('kinetic', 'magnetic_length', 'wall_exponent'):
            assert_allclose(red.get(name).ratio, physical.get(name).ratio, rtol=1e-12)

    def test_does_not_raise_or_mutate(self):
        setup = natural_setup(H=0.0, a=-1.0)
        report = validate(setup)
        self.assertFalse(report.ok)
        self.assertIsNone(report.get('kinetic').margin)
        self.assertEqual(setup.a, -1.0)

    def test_threshold_override(self):
        report = validate_reduced(alpha=1.0 / 0.9, nu=1.0, N=1, threshold=0.95)
        self.assertEqual(report.get('magnetic_length').status, 'pass')


class UnitSystemTest(unittest.TestCase):

    def test_atomic_speed_of_light(self):
        assert_allclose(UnitSystem.atomic().c, 137.035999, rtol=1e-8)

    def test_unknown_name(self):
        with self.assertRaises(DomainError):
            UnitSystem.named('imperial')


class GridSpecTest(unittest.TestCase):

    def test_nodes(self):
        grid = GridSpec(nx=10, ny=8, x_max=5.0, y_max=2.0)
        grid.clean()
        self.assertEqual(grid.shape, (10, 7))
        self.assertEqual(grid.y_nodes()[grid.center_row], 0.0)
        assert_allclose(grid.x_nodes()[-1], 4.5)
        assert_allclose(grid.y_nodes()[0], -1.5)

    def test_odd_ny_rejected(self):
        with self.assertRaises(DomainError):
            GridSpec(nx=10, ny=9, x_max=1.0, y_max=1.0).clean()
