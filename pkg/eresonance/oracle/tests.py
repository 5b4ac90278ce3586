# oracle/tests.py
import math
import time
import unittest

import numpy as np
from numpy.testing import assert_allclose

from core.exceptions import DomainError, NumericError, ResolutionError
from core.models import GridSpec
from bounce.services import hard_wall_action
from field.services import detect_nodes
from hjsolver.services import period
from .services import (
    axis_log_slope, build_control_problem, build_problem, check_resolution, compare_semiclassics,
    grid_for, hermiticity_residual, measure_suppression, resonance_scan, scan_point, solve_ground,
)
from .tasks import scan_point_task


def small_grid(alpha=1.0, nx=96, ny=48):
    return GridSpec(nx=nx, ny=ny, x_max=2.25 * period(alpha), y_max=1.3 * alpha)


class ControlProblemTest(unittest.TestCase):

    def test_robin_bound_state(self):
        x_max = 2.25 * period(1.0)
        solution = solve_ground(build_control_problem(4.0, x_max, 384))
        self.assertLess(abs(solution.eigenvalue + 1.0), 0.01)
        slope = axis_log_slope(solution, 0.2, 3.0)
        self.assertLess(abs(slope / -4.0 - 1.0), 0.01)

    def test_second_order_convergence(self):
        x_max = 2.25 * period(1.0)
        errors = [abs(solve_ground(build_control_problem(4.0, x_max, nx)).eigenvalue + 1.0)
                  for nx in (96, 192, 384)]
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert_allclose(orders, 2.0, atol=0.1)

    def test_target_energy_sets_decay(self):
        solution = solve_ground(build_control_problem(4.0, 8.0, 768, target_energy=-0.5), shift=-0.5)
        assert_allclose(solution.eigenvalue, -0.5, rtol=2e-3)
        assert_allclose(axis_log_slope(solution, 0.2, 3.0), -4.0 * math.sqrt(0.5), rtol=2e-3)

    def test_self_consistent_fine_grid_settles(self):
        problem = build_control_problem(4.0, 8.0, 1536)
        solution = solve_ground(problem, self_consistent=True, consistency_tol=1e-3)
        assert_allclose(solution.eigenvalue, -1.0, atol=1e-3)

    def test_energy_matched_on_coarse_grid(self):
        # the O(h^2) energy loss of a coarse grid is absorbed by the Robin coefficient
        problem = build_control_problem(4.0, 8.0, 96)
        plain = solve_ground(problem)
        matched = solve_ground(problem, self_consistent=True)
        self.assertGreater(abs(plain.eigenvalue + 1.0), 1e-6)
        self.assertLess(abs(matched.eigenvalue + 1.0), 1e-9)
        self.assertNotAlmostEqual(matched.problem.robin_coefficient, 4.0, places=6)

    def test_robin_update_limit(self):
        problem = build_control_problem(4.0, 8.0, 96)
        with self.assertRaises(NumericError) as ctx:
            solve_ground(problem, self_consistent=True, max_updates=0)
        self.assertEqual(len(ctx.exception.history), 1)

    def test_iteration_limit(self):
        problem = build_control_problem(4.0, 8.0, 96)
        with self.assertRaises(NumericError) as ctx:
            solve_ground(problem, shift=3.0, tol=1e-15, maxiter=2)
        self.assertEqual(len(ctx.exception.history), 2)


class BuildProblemTest(unittest.TestCase):

    def test_hermitian(self):
        problem = build_problem(4.0, 1.0, 50.0, 4, small_grid(nx=40, ny=20), check=False)
        self.assertLess(hermiticity_residual(problem), 1e-12)
        difference = problem.operator - problem.operator.conj().T
        self.assertEqual(abs(difference).max(), 0.0)

    def test_hermitian_with_gauge_shift(self):
        problem = build_problem(4.0, 1.0, 50.0, 4, small_grid(nx=40, ny=20), gauge_shift=0.4, check=False)
        self.assertLess(hermiticity_residual(problem, seed=3), 1e-12)

    def test_resolution_error_names_scale(self):
        with self.assertRaises(ResolutionError) as ctx:
            build_problem(4.0, 1.0, 50.0, 4, small_grid(nx=40, ny=256))
        self.assertEqual(ctx.exception.field, 'hx')
        with self.assertRaises(ResolutionError) as ctx:
            build_problem(4.0, 1.0, 50.0, 4, small_grid(nx=384, ny=40))
        self.assertEqual(ctx.exception.axis, 'y')

    def test_wall_inside_domain(self):
        grid = GridSpec(nx=384, ny=256, x_max=2.25 * period(1.0), y_max=1.1)
        with self.assertRaises(DomainError) as ctx:
            build_problem(4.0, 1.0, 50.0, 4, grid)
        self.assertEqual(ctx.exception.field, 'y_max')

    def test_default_grid_resolves(self):
        check_resolution(grid_for(1.0, 4.0, 4), 1.0, 4.0, 4)
        for alpha in (0.3, 1.2, 2.2):
            check_resolution(grid_for(alpha, 4.0, 4, 'fixed-spacing'), alpha, 4.0, 4)

    def test_unknown_policy(self):
        with self.assertRaises(DomainError):
            grid_for(1.0, 4.0, 4, 'adaptive')

    def test_gauge_covariance(self):
        grid = small_grid()
        plain = solve_ground(build_problem(4.0, 1.0, 50.0, 4, grid, check=False))
        shifted = solve_ground(build_problem(4.0, 1.0, 50.0, 4, grid, gauge_shift=0.35, check=False))
        assert_allclose(shifted.eigenvalue, plain.eigenvalue, rtol=1e-9)
        assert_allclose(np.abs(shifted.psi), np.abs(plain.psi), atol=1e-7)

    def test_zero_field_control(self):
        grid = GridSpec(nx=384, ny=48, x_max=2.25 * period(1.0), y_max=1.3)
        solution = solve_ground(build_problem(4.0, 1.0, 50.0, 4, grid, magnetic=False, check=False))
        self.assertLess(abs(axis_log_slope(solution, 0.3, 3.0) / -4.0 - 1.0), 0.01)
        self.assertLess(abs(solution.imaginary_part), 1e-10)


class DefaultRegimeTest(unittest.TestCase):
    """nu = 4, alpha = 1, N = 4, u0/|E| = 50 on the default 384 x 256 grid"""

    @classmethod
    def setUpClass(cls):
        start = time.perf_counter()
        cls.grid = grid_for(1.0, 4.0, 4)
        cls.problem = build_problem(4.0, 1.0, 50.0, 4, cls.grid)
        cls.solution = solve_ground(cls.problem)
        cls.report = compare_semiclassics(cls.solution)
        cls.elapsed = time.perf_counter() - start

    def test_runtime(self):
        self.assertLess(self.elapsed, 60.0)

    def test_hermitian(self):
        self.assertLess(hermiticity_residual(self.problem), 1e-12)

    def test_converged(self):
        self.assertLess(self.solution.residual, 1e-10 * max(1.0, abs(self.solution.eigenvalue)))
        self.assertLess(abs(self.solution.imaginary_part), 1e-10)
        norm = np.sum(self.problem.mass_weights() * np.abs(self.solution.psi.ravel()) ** 2)
        assert_allclose(norm, 1.0, rtol=1e-12)

    def test_eigenvalue_bound(self):
        self.assertLess(self.solution.eigenvalue, 0.0)
        self.assertLess(self.solution.deviation, 0.5)

    def test_axis_is_real(self):
        axis = self.solution.psi[:, self.grid.center_row]
        self.assertLess(np.max(np.abs(axis.imag)), 1e-8 * np.max(np.abs(axis)))
        self.assertGreater(axis[0].real, 0)

    def test_parity(self):
        modulus = np.abs(self.solution.psi)
        assert_allclose(modulus, modulus[:, ::-1], atol=1e-8 * modulus.max())

    def test_nodes_one_per_period(self):
        nodes = detect_nodes(self.solution.grid_field())
        self.assertEqual(len(nodes), int(self.grid.x_max / period(1.0) + 0.5))

    def test_decay_slope(self):
        self.assertTrue(self.report.get('decay_slope').passed, self.report.get('decay_slope'))

    def test_outside_semiclassical_regime(self):
        # l / a = 0.5 at nu = 4, alpha = 1
        self.assertFalse(self.report.semiclassical)
        self.assertIn('(warn)', self.report.regime)
        self.assertEqual(sorted(self.report.deferred), ['eigenvalue', 'first_node', 'suppression'])
        self.assertTrue(self.report.passed, self.report.comparisons)

    def test_first_node_is_reported(self):
        item = self.report.get('first_node')
        self.assertTrue(item.needs_semiclassical)
        assert_allclose(item.measured, detect_nodes(self.solution.grid_field())[0], rtol=1e-14)
        assert_allclose(item.predicted, 0.5 * period(1.0), rtol=1e-14)

    def test_disjoining(self):
        self.assertTrue(self.report.get('disjoining').passed, self.report.get('disjoining'))

    def test_winding(self):
        self.assertTrue(self.report.get('winding').passed, self.report.get('winding'))

    def test_gauge_identity(self):
        self.assertTrue(self.report.get('gauge_identity').passed, self.report.get('gauge_identity'))

    def test_suppression_is_reported(self):
        item = self.report.get('suppression')
        self.assertTrue(item.needs_semiclassical)
        assert_allclose(item.measured, math.log(measure_suppression(self.solution)), rtol=1e-12)
        assert_allclose(item.predicted, -hard_wall_action(1.0, 4.0).total, rtol=1e-12)

    def test_self_consistent_at_defaults(self):
        problem = build_problem(4.0, 1.0, 50.0, 4, grid_for(1.0, 4.0, 4, nx=192, ny=128), check=False)
        solution = solve_ground(problem, self_consistent=True)
        self.assertLess(abs(solution.eigenvalue + 1.0), 1e-6)
        # the transverse zero-point energy is paid for by a deeper Robin target
        self.assertLess(solution.problem.target_energy, -1.0)

    def test_measured_suppression_below_one(self):
        measured = measure_suppression(self.solution)
        self.assertGreater(measured, 0.0)
        self.assertLess(measured, 1.0)

    def test_refinement(self):
        coarse = solve_ground(build_problem(4.0, 1.0, 50.0, 4, grid_for(1.0, 4.0, 4, nx=192, ny=128),
                                            check=False))
        self.assertLess(abs(coarse.eigenvalue / self.solution.eigenvalue - 1.0), 0.01)


class ScanTest(unittest.TestCase):

    def test_scan_rows(self):
        rows = resonance_scan(4.0, [0.5, 1.2], policy='fixed-count', n_jobs=1)
        self.assertEqual([row.status for row in rows], ['ok', 'ok'])
        # the hard-wall prediction weakens toward resonance
        self.assertLess(rows[0].predicted, rows[1].predicted)
        for row in rows:
            self.assertTrue(0.0 < row.measured < 1.0, row)
            self.assertIsNotNone(row.log_ratio)
            assert_allclose(row.predicted, hard_wall_action(row.alpha, 4.0).suppression)

    def test_under_resolved_point_is_recorded(self):
        row = scan_point(2.1, 4.0, 4, 50.0, policy='fixed-count')
        self.assertEqual(row.status, 'error')
        self.assertIn('vortex core', row.error)

    def test_range(self):
        with self.assertRaises(DomainError):
            resonance_scan(4.0, [0.1, 1.0])

    def test_range_is_open(self):
        for alpha in (0.3, 2.2):
            with self.assertRaises(DomainError):
                resonance_scan(4.0, [alpha])

    def test_task_runs_in_process(self):
        result = scan_point_task.apply(args=(2.1, 4.0, 4, 50.0, 'fixed-count')).get()
        self.assertEqual(result['status'], 'error')
        self.assertEqual(result['alpha'], 2.1)
