# field/tests.py
import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from core.exceptions import CoverageError, DomainError
from core.models import GridSpec
from hjsolver.services import period
from .models import GridField
from .services import (
    CURRENT_COLUMNS, FIELD_COLUMNS, assemble_field, circulation, current, current_rows,
    detect_nodes, enclosed_area, field_rows, gauge_invariant_Q, phase_gradient, regions_for,
    square_loop, vortex_records,
)


def semiclassical(alpha=1.0, nu=4.0, nx=240, ny=120):
    grid = GridSpec(nx=nx, ny=ny, x_max=2.0 * period(alpha), y_max=1.2 * alpha)
    return assemble_field(grid, alpha, nu)


def synthetic_vortex(x0=1.0, nu=4.0, shift=0.0):
    """psi = (x - x0) + i y, a single node of winding +1"""
    grid = GridSpec(nx=80, ny=80, x_max=2.0, y_max=1.0)
    X, Y = grid.mesh()
    psi = (X - x0) + 1j * Y
    return GridField(grid=grid, psi=psi, region=regions_for(grid, 1.0),
                     valid=np.ones(grid.shape, dtype=bool), alpha=1.0, nu=nu,
                     source='oracle', gauge_shift=shift)


class AssembleFieldTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.field = semiclassical()

    def test_normalization(self):
        self.assertEqual(self.field.psi[0, self.field.grid.center_row], 1.0)

    def test_modulus_constant_along_y(self):
        field = self.field
        for i in range(0, 60, 7):
            column = field.modulus[i][field.region[i] == 0]
            self.assertGreater(len(column), 1)
            self.assertLess(column.max() - column.min(), 1e-12)

    def test_minima_straddle_core(self):
        field = self.field
        row = field.grid.center_row
        axis = np.abs(field.axis)
        half = 0.5 * period(1.0)
        in_zero = np.flatnonzero(field.region[:, row] == 0)
        in_one = np.flatnonzero(field.region[:, row] == 1)
        self.assertEqual(in_zero[np.argmin(axis[in_zero])], in_zero[-1])
        self.assertLess(field.x[in_zero[-1]], half)
        self.assertGreater(field.x[in_one[0]], half)
        # |psi| jumps up entering region 1
        self.assertGreater(axis[in_one[0]], axis[in_zero[-1]])

    def test_core_node_masked(self):
        field = self.field
        row = field.grid.center_row
        # hx = Delta x / 120, so node 60 sits on the first core
        assert_allclose(field.x[60], 0.5 * period(1.0), rtol=1e-14)
        self.assertEqual(field.region[60, row], -1)
        self.assertFalse(field.valid[60, row])
        self.assertTrue(np.isnan(field.psi[60, row]))

    def test_masked_outside(self):
        field = self.field
        self.assertTrue(np.all(np.isnan(field.psi[~field.valid])))
        self.assertTrue(np.all(np.isfinite(field.psi[field.valid])))

    def test_degenerate_grid(self):
        with self.assertRaises(DomainError):
            assemble_field(GridSpec(nx=2, ny=8, x_max=1.0, y_max=1.0), 1.0, 4.0)


class GaugeInvariantQTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.field = semiclassical()
        cls.Qx, cls.Qy = gauge_invariant_Q(cls.field)

    def test_longitudinal_component_vanishes(self):
        self.assertLess(np.nanmax(np.abs(self.Qx)), 1e-12)

    def test_transverse_component(self):
        field = self.field
        X, _ = field.grid.mesh()
        expected = X - field.region * period(1.0)
        assert_allclose(self.Qy[field.valid], expected[field.valid], atol=1e-12)
        assert_allclose(self.Qy[0][field.valid[0]], 0.0, atol=1e-15)

    def test_finite_difference_phase_gradient(self):
        field = self.field
        numeric = GridField(grid=field.grid, psi=field.psi, region=field.region, valid=field.valid,
                            alpha=field.alpha, nu=field.nu)
        fx, fy = phase_gradient(numeric)
        ax, ay = field.chi_gradient
        r = field.region
        same_x = np.zeros_like(field.valid)
        same_x[1:-1] = (r[2:] == r[1:-1]) & (r[:-2] == r[1:-1]) & (r[1:-1] >= 0)
        same_y = np.zeros_like(field.valid)
        same_y[:, 1:-1] = (r[:, 2:] == r[:, 1:-1]) & (r[:, :-2] == r[:, 1:-1]) & (r[:, 1:-1] >= 0)
        assert_allclose(fx[same_x], ax[same_x], atol=1e-8)
        assert_allclose(fy[same_y], ay[same_y], atol=1e-8)

    def test_current_reverses_across_core(self):
        field = self.field
        row = field.grid.center_row
        jx, jy = current(field)
        # one node off the axis, either side of the core
        j = row + 1
        left = np.flatnonzero(field.region[:, j] == 0)[-1]
        right = np.flatnonzero(field.region[:, j] == 1)[0]
        self.assertLess(jy[left, j], 0)
        self.assertGreater(jy[right, j], 0)

    def test_current_parallel_to_Q(self):
        jx, jy = current(self.field)
        cross = jx * self.Qy - jy * self.Qx
        self.assertLess(np.nanmax(np.abs(cross)), 1e-14)


class CirculationTest(unittest.TestCase):

    def test_loop_without_node(self):
        field = semiclassical()
        result = circulation(field, square_loop((0.5, 0.0), 0.3))
        self.assertEqual(result.winding, 0)
        assert_allclose(result.enclosed_flux, 0.36, rtol=1e-12)
        assert_allclose(result.circulation, result.enclosed_flux, rtol=1e-12)

    def test_loop_through_mask(self):
        field = semiclassical()
        with self.assertRaises(CoverageError):
            circulation(field, square_loop((0.5 * period(1.0), 0.0), 0.3))

    def test_winding_around_node(self):
        field = synthetic_vortex()
        result = circulation(field, square_loop((1.0, 0.0), 0.45))
        self.assertEqual(result.winding, 1)
        self.assertLess(abs(result.gauge_residual), 1e-3 * abs(result.circulation))
        assert_allclose(result.circulation, 0.81 + 2 * math.pi / 4.0, rtol=1e-10)

    def test_orientation_flips_signs(self):
        field = synthetic_vortex()
        ccw = circulation(field, square_loop((1.0, 0.0), 0.4))
        cw = circulation(field, square_loop((1.0, 0.0), 0.4, clockwise=True))
        self.assertEqual(cw.winding, -ccw.winding)
        assert_allclose(cw.circulation, -ccw.circulation, rtol=1e-12)
        assert_allclose(cw.enclosed_flux, -ccw.enclosed_flux, rtol=1e-12)

    def test_gauge_shift_leaves_circulation(self):
        plain = circulation(synthetic_vortex(), square_loop((1.0, 0.2), 0.3))
        shifted = circulation(synthetic_vortex(shift=0.37), square_loop((1.0, 0.2), 0.3))
        assert_allclose(shifted.circulation, plain.circulation, rtol=1e-12)

    def test_shoelace(self):
        self.assertAlmostEqual(enclosed_area(square_loop((3.0, -1.0), 0.5)), 1.0)

    def test_detect_and_record(self):
        field = synthetic_vortex(x0=1.03)
        nodes = detect_nodes(field)
        self.assertEqual(len(nodes), 1)
        assert_allclose(nodes[0], 1.03, atol=1e-12)
        records = vortex_records(field, 0.4)
        self.assertEqual(records[0].winding, 1)
        self.assertEqual(records[0].describe_loop()['kind'], 'polygon')

    def test_rejects_short_loop(self):
        with self.assertRaises(DomainError):
            circulation(synthetic_vortex(), np.array([[0.5, 0.0], [0.6, 0.0]]))


class RowsTest(unittest.TestCase):

    def test_field_rows(self):
        field = semiclassical(nx=20, ny=10)
        rows = list(field_rows(field))
        self.assertEqual(len(rows), 20 * 9)
        self.assertEqual(len(rows[0]), len(FIELD_COLUMNS))
        # y runs fastest
        self.assertEqual(rows[0][0], rows[1][0])
        self.assertLess(rows[0][1], rows[1][1])
        masked = [row for row in rows if row[8] is None]
        self.assertTrue(masked)
        self.assertTrue(all(cell is None for row in masked for cell in row[2:8]))

    def test_current_rows(self):
        field = semiclassical(nx=20, ny=10)
        rows = list(current_rows(field))
        self.assertEqual(len(rows[0]), len(CURRENT_COLUMNS))
        self.assertEqual(len(rows), 20 * 9)
