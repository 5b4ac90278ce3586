# cli/reports.py
"""Data products of each subcommand, as Tables and Documents"""
import math
import logging

import numpy as np

from core.exceptions import DomainError
from bounce.services import (
    action_along_field, find_alpha_R, hard_wall_action, integrate_bounce, resonance_coefficient,
    resonance_field,
)
from effpot.services import (
    PROFILE_COLUMNS, extract_U, high_field_shift, level_coincidence, levels_1d, piecewise_potential,
    reduced_high_field_potential, semiclassical_potential, sweep_well_depth,
)
from field.services import (
    CURRENT_COLUMNS, FIELD_COLUMNS, assemble_field, current_rows, field_rows, vortex_records,
)
from hjsolver.services import (
    action, boundary_curves, logarithmic_profile, period, region_index,
)
from oracle.models import ScanRow
from oracle.services import (
    SCAN_RANGE, build_problem, compare_semiclassics, grid_for, hermiticity_residual, resonance_scan,
    solve_ground,
)
from .models import Document, RunConfig, RunResult, Table
from .services import dimensionless, physical_setup

logger = logging.getLogger('eresonance.cli')

RESONANCE_COLUMNS = ('alpha_R', 'delta_x_over_a', 'coefficient', 'coefficient_closed_form',
                     'coefficient_finite_difference', 'H_R')
ACTION_COLUMNS = ('alpha', 'nu', 'a_wkb', 'transverse', 'total', 'relative', 'suppression')
PROFILE_AXIS_COLUMNS = ('x', 'region', 'abs_psi', 'log_abs_psi', 'logarithmic')
REGION_COLUMNS = ('region', 'x', 'y')
BOUNCE_COLUMNS = ('tau', 'eta', 'velocity')
AXIS_COLUMNS = ('x', 're_psi', 'im_psi', 'abs_psi')
SCAN_COLUMNS = tuple(ScanRow.model_fields)


def _option(config: RunConfig, name: str, default):
    value = config.options.get(name)
    return default if value is None else value


def _alpha_list(config: RunConfig):
    """--alphas, else --alpha-min/--alpha-max/--points, else the single resolved alpha"""
    values = config.options.get('alphas')
    if values:
        try:
            return [float(item) for item in str(values).split(',') if item.strip()]
        except ValueError:
            raise DomainError(f"expected comma-separated numbers, got '{values}'", field='alphas')
    lo, hi = config.options.get('alpha_min'), config.options.get('alpha_max')
    if lo is not None and hi is not None:
        return [float(value) for value in np.linspace(lo, hi, int(_option(config, 'points', 2)))]
    return [config.alpha]


def resonance(config: RunConfig) -> RunResult:
    tolerance = _option(config, 'tol', 1e-13)
    alpha_R = find_alpha_R(tolerance)
    coefficient = resonance_coefficient(tolerance)
    setup = physical_setup(config)
    H_R = resonance_field(setup, tolerance) if setup is not None else None
    row = (alpha_R, period(alpha_R) / alpha_R, coefficient.value, coefficient.closed_form,
           coefficient.finite_difference, H_R)
    summary = {'alpha_R': alpha_R, 'coefficient': coefficient.value}
    if H_R is not None:
        summary['H_R'] = H_R
    return RunResult(artifacts=[Table('resonance', RESONANCE_COLUMNS, [row])], summary=summary)


def action_table(config: RunConfig) -> RunResult:
    alphas = _alpha_list(config)
    kappa = config.options.get('kappa')
    rows = []
    for alpha in alphas:
        if kappa is None:
            breakdown = hard_wall_action(alpha, config.nu)
        else:
            breakdown = action_along_field(alpha, kappa)
        rows.append((breakdown.alpha, breakdown.nu, breakdown.a_wkb, breakdown.transverse,
                     breakdown.total, breakdown.relative, breakdown.suppression))
    return RunResult(artifacts=[Table('action', ACTION_COLUMNS, rows)], summary={'rows': len(rows)})


def profile(config: RunConfig) -> RunResult:
    alpha, nu = config.alpha, config.nu
    dimensionless(config)
    periods = int(_option(config, 'periods', 3))
    points = int(_option(config, 'points', 200))
    if periods < 1 or points < 2:
        raise DomainError(f"need periods >= 1 and points >= 2, got {periods}, {points}", field='points')
    x = np.linspace(0.0, periods * period(alpha), periods * points + 1)
    rows = []
    for xi in x:
        k = region_index(float(xi), 0.0, alpha)
        if k is None:
            # vortex core: no semiclassical amplitude
            rows.append((xi, None, None, None, None))
            continue
        log_abs = -nu * action(float(xi), 0.0, alpha).sigma.real
        logarithmic = logarithmic_profile(float(xi), nu) if k == 0 else None
        rows.append((xi, k, math.exp(log_abs), log_abs, logarithmic))
    return RunResult(artifacts=[Table('profile', PROFILE_AXIS_COLUMNS, rows)],
                     summary={'rows': len(rows)})


def regions(config: RunConfig) -> RunResult:
    periods = int(_option(config, 'periods', 3))
    points = int(_option(config, 'points', 201))
    rows = []
    for k, xs, ys in boundary_curves(config.alpha, periods, points):
        rows.extend((k, x, y) for x, y in zip(xs, ys))
    return RunResult(artifacts=[Table('regions', REGION_COLUMNS, rows)], summary={'regions': periods})


def _oracle_solution(config: RunConfig, nx=None, ny=None):
    policy = _option(config, 'policy', 'fixed-count')
    grid = grid_for(config.alpha, config.nu, config.N, policy, nx, ny)
    problem = build_problem(config.nu, config.alpha, config.wall_energy_ratio, config.N, grid)
    return solve_ground(problem, self_consistent=bool(_option(config, 'self_consistent', False)))


def _loop_half_width(config: RunConfig) -> float:
    return float(_option(config, 'loop_half_width', 2.0 / (config.alpha * config.nu)))


def field_grid(config: RunConfig) -> RunResult:
    dimensionless(config)
    source = _option(config, 'source', 'semiclassical')
    nx, ny = config.options.get('nx'), config.options.get('ny')
    if source == 'semiclassical':
        grid = grid_for(config.alpha, config.nu, config.N, 'fixed-count', nx, ny)
        field = assemble_field(grid, config.alpha, config.nu)
        vortices = []
    elif source == 'oracle':
        field = _oracle_solution(config, nx, ny).grid_field()
        vortices = vortex_records(field, _loop_half_width(config))
    else:
        raise DomainError(f"unknown field source '{source}'", field='source')

    loops = [{
        'x': record.x,
        'y': record.y,
        'winding': record.winding,
        'winding_raw': record.loop.winding_raw,
        'circulation': record.circulation,
        'enclosed_flux': record.loop.enclosed_flux,
        'flux_quantum': record.loop.flux_quantum,
        'gauge_residual': record.loop.gauge_residual,
        'loop': record.describe_loop(),
    } for record in vortices]
    artifacts = [
        Table('field', FIELD_COLUMNS, list(field_rows(field))),
        Table('current', CURRENT_COLUMNS, list(current_rows(field))),
        Document('vortices', {'source': source, 'gauge': field.gauge, 'vortices': loops}),
    ]
    return RunResult(artifacts=artifacts, summary={'source': source, 'vortices': len(loops)})


def bounce(config: RunConfig) -> RunResult:
    result = integrate_bounce(config.alpha, config.nu, config.wall_energy_ratio, config.N,
                              samples=int(_option(config, 'samples', 201)))
    hard_wall = hard_wall_action(config.alpha, config.nu)
    rows = list(zip(result.tau, result.eta, result.velocity))
    summary = {
        'alpha': result.alpha,
        'nu': result.nu,
        'wall_energy_ratio': result.wall_energy_ratio,
        'wall_exponent': result.wall_exponent,
        'period': result.period,
        'turning_point': result.turning_point,
        'transverse_action': result.transverse_action,
        'transverse_action_time_stepping': result.transverse_action_ivp,
        'a_wkb': result.a_wkb,
        'total_action': result.total_action,
        'hard_wall_total_action': hard_wall.total,
        'energy_residual': result.energy_residual,
    }
    return RunResult(artifacts=[Table('bounce', BOUNCE_COLUMNS, rows), Document('bounce_action', summary)],
                     summary={'total_action': result.total_action})


def oracle(config: RunConfig) -> RunResult:
    dimensionless(config)
    solution = _oracle_solution(config, config.options.get('nx'), config.options.get('ny'))
    report = compare_semiclassics(solution, config.alpha, config.nu, _loop_half_width(config))
    problem = solution.problem
    grid = problem.grid
    axis = solution.psi[:, grid.center_row]
    eigen = {
        'problem': problem.describe(),
        'eigenvalue': solution.eigenvalue,
        'deviation': solution.deviation,
        'imaginary_part': solution.imaginary_part,
        'residual': solution.residual,
        'iterations': solution.iterations,
        'history': solution.history,
        'hermiticity_residual': hermiticity_residual(problem),
    }
    rows = [(x, value.real, value.imag, abs(value)) for x, value in zip(grid.x_nodes(), axis)]
    artifacts = [
        Document('eigen', eigen),
        Document('report', {**report.model_dump(), 'passed': report.passed, 'deferred': report.deferred}),
        Table('axis', AXIS_COLUMNS, rows),
    ]
    return RunResult(artifacts=artifacts,
                     summary={'eigenvalue': solution.eigenvalue, 'passed': report.passed})


def effective_potential(config: RunConfig) -> RunResult:
    alpha, nu = config.alpha, config.nu
    dimensionless(config)
    depth = float(_option(config, 'depth', 2.0 * alpha ** 2))
    periods = int(_option(config, 'periods', 3))
    points = int(_option(config, 'points', 4000))
    half_window = float(_option(config, 'window', 0.5))
    tolerance = float(_option(config, 'tolerance', 0.05))

    piecewise = piecewise_potential(alpha, nu, depth, periods, points)
    x = piecewise.x
    parabolic = semiclassical_potential(alpha, x)
    x0 = high_field_shift(0.5 * period(alpha), alpha, 1.0 / math.sqrt(nu))
    high_field = reduced_high_field_potential(x, alpha, nu, x0)
    profiles = [parabolic, high_field, piecewise]

    if _option(config, 'oracle', False):
        solution = _oracle_solution(config)
        extraction = extract_U(solution.grid_field(), solution.eigenvalue)
        profiles.extend([extraction.transverse, extraction.longitudinal])

    window = (-1.0 - half_window, -1.0 + half_window)
    levels = levels_1d(piecewise, window)
    payload = {
        'alpha': alpha,
        'nu': nu,
        'depth': depth,
        'window': list(window),
        'levels': levels,
        'coincidence': level_coincidence(levels, -1.0, tolerance),
        'high_field_shift': x0,
        'singular_points': {item.variant: item.singular_points for item in profiles},
        'sweep': None,
    }
    sweep_max = config.options.get('sweep_depth')
    if sweep_max is not None:
        depths = np.linspace(0.0, float(sweep_max), int(_option(config, 'sweep_steps', 13)))
        sweep = sweep_well_depth(alpha, nu, depths, -1.0, periods, points)
        payload['sweep'] = {'depths': sweep.depths, 'counts': sweep.counts, 'crossings': sweep.crossings}

    rows = [row for item in profiles for row in item.rows()]
    return RunResult(artifacts=[Table('potential', PROFILE_COLUMNS, rows), Document('levels', payload)],
                     summary={'levels': len(levels), 'coincident': payload['coincidence']['coincident']})


def _scan_with_broker(config: RunConfig, alphas, policy, broker: str):
    from celery import group
    from eresonance.celery_app import app
    from oracle.tasks import scan_point_task

    app.conf.broker_url = broker
    app.conf.result_backend = broker
    job = group(scan_point_task.s(float(alpha), config.nu, config.N, config.wall_energy_ratio, policy)
                for alpha in alphas)
    logger.info(f"Dispatching {len(alphas)} scan points to {broker}")
    return [ScanRow(**row) for row in job.apply_async().get()]


def scan(config: RunConfig) -> RunResult:
    alphas = _alpha_list(config)
    policy = _option(config, 'policy', 'fixed-spacing')
    broker = config.options.get('broker')
    lo, hi = SCAN_RANGE
    for alpha in alphas:
        if not lo < alpha < hi:
            raise DomainError(f"scan values must lie in ({lo}, {hi}), got {alpha!r}", field='alpha')
    if broker:
        scan_rows = _scan_with_broker(config, alphas, policy, broker)
    else:
        scan_rows = resonance_scan(config.nu, alphas, policy, config.N, config.wall_energy_ratio,
                                   n_jobs=config.threads)
    rows = [tuple(getattr(row, name) for name in SCAN_COLUMNS) for row in scan_rows]
    failed = sum(row.status != 'ok' for row in scan_rows)
    return RunResult(artifacts=[Table('scan', SCAN_COLUMNS, rows)],
                     summary={'rows': len(rows), 'failed': failed})


BUILDERS = {
    'resonance': resonance,
    'action': action_table,
    'profile': profile,
    'regions': regions,
    'field': field_grid,
    'bounce': bounce,
    'oracle': oracle,
    'effpot': effective_potential,
    'scan': scan,
}
