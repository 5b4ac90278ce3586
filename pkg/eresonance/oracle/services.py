# oracle/services.py
"""Direct finite-difference solution of the reduced 2D eigenproblem

    -(1/nu^2) [(d_x - i nu (y - y0))^2 + d_y^2] psi + w (y/alpha)^(4N) psi = E psi

on x >= 0 with (d_x - i nu y) psi = -kappa psi at x = 0, kappa = nu sqrt(-E_target),
and Dirichlet ends at x = X, y = +-Y.
"""
import math
import logging
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from eresonance import settings
from core.exceptions import DomainError, EngineError, NumericError, ResolutionError
from core.models import GridSpec
from core.services import validate_reduced
from bounce.services import hard_wall_action
from field.services import circulation, detect_nodes, square_loop
from hjsolver.services import action_arrays, period
from .models import Comparison, DiscreteProblem, EigenSolution, ScanRow, SemiclassicalReport

logger = logging.getLogger('eresonance.oracle')

GRID_POLICIES = ('fixed-count', 'fixed-spacing')
SCAN_RANGE = (0.3, 2.2)
MIN_NX, MIN_NY = 64, 32
# Conditions under which the node position and the per-period suppression are judged
SEMICLASSICAL_CONDITIONS = ('kinetic', 'magnetic_length')


def grid_for(alpha: float, nu: float, N: int, policy: str = 'fixed-count',
             nx: Optional[int] = None, ny: Optional[int] = None) -> GridSpec:
    """Default domain X = ER_X_PERIODS Delta x, Y = alpha (1 + 1.5 margin)"""
    if policy not in GRID_POLICIES:
        raise DomainError(f"unknown grid policy '{policy}'", field='policy')
    x_max = settings.ER_X_PERIODS * period(alpha)
    y_max = alpha * (1.0 + 1.5 * settings.ER_WALL_MARGIN)
    if policy == 'fixed-count':
        nx = settings.ER_DEFAULT_NX if nx is None else nx
        ny = settings.ER_DEFAULT_NY if ny is None else ny
    else:
        hx, hy = required_spacing(alpha, nu, N)
        nx = max(int(math.ceil(x_max / hx)), MIN_NX)
        ny = max(2 * int(math.ceil(y_max / hy)), MIN_NY)
    grid = GridSpec(nx=nx, ny=ny, x_max=x_max, y_max=y_max)
    grid.clean()
    return grid


def required_spacing(alpha: float, nu: float, N: int):
    """Largest admissible (hx, hy)"""
    per_scale = settings.ER_NODES_PER_SCALE
    bulk = min(1.0 / math.sqrt(nu), 1.0 / (alpha * nu)) / per_scale
    wall = 0.5 * alpha / (4 * N)
    return bulk, min(bulk, wall)


def check_resolution(grid: GridSpec, alpha: float, nu: float, N: int):
    per_scale = settings.ER_NODES_PER_SCALE
    scales = (('magnetic length', 1.0 / math.sqrt(nu), per_scale),
              ('vortex core scale', 1.0 / (alpha * nu), per_scale))
    for axis, h in (('x', grid.hx), ('y', grid.hy)):
        for name, scale, count in scales:
            if h > scale / count:
                raise ResolutionError(name, h, scale / count, axis)
    wall = alpha / (4 * N)
    if grid.hy > 0.5 * wall:
        raise ResolutionError('wall rise length', grid.hy, 0.5 * wall, 'y')


def _check_domain(grid: GridSpec, alpha: float):
    margin = settings.ER_WALL_MARGIN
    if not grid.y_max > alpha * (1.0 + margin):
        raise DomainError(f"must exceed alpha (1 + {margin:g}) = {alpha * (1 + margin):.6g}, "
                          f"got {grid.y_max:.6g}", field='y_max')
    if grid.x_max < 2.0 * period(alpha):
        raise DomainError(f"must cover two periods ({2 * period(alpha):.6g}), got {grid.x_max:.6g}",
                          field='x_max')


def _x_diagonal(nx: int, hx: float, kappa: float) -> np.ndarray:
    diag = np.full(nx, 2.0 / hx ** 2)
    # Robin row folded with the half-cell mass hx/2
    diag[0] = 2.0 * (1.0 / hx ** 2 - kappa / hx)
    return diag


def _x_coupling(nx: int, hx: float) -> np.ndarray:
    """Symmetrized |coupling| between x nodes i and i+1"""
    weights = np.full(nx - 1, 1.0 / hx ** 2)
    weights[0] = math.sqrt(2.0) / hx ** 2
    return weights


def build_problem(nu: float, alpha: float, wall_energy_ratio: float, N: int, grid: GridSpec,
                  magnetic: bool = True, gauge_shift: float = 0.0, target_energy: float = -1.0,
                  check: bool = True) -> DiscreteProblem:
    for name, value in (('nu', nu), ('alpha', alpha), ('u0', wall_energy_ratio)):
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"must be a finite positive number, got {value!r}", field=name)
    if int(N) != N or N < 1:
        raise DomainError(f"must be a positive integer, got {N!r}", field='N')
    if not target_energy < 0:
        raise DomainError(f"must be negative, got {target_energy!r}", field='target_energy')
    grid.clean()
    if check:
        _check_domain(grid, alpha)
        check_resolution(grid, alpha, nu, int(N))

    nx, ny = grid.nx, grid.ny - 1
    hx, hy = grid.hx, grid.hy
    y = grid.y_nodes()
    kappa = nu * math.sqrt(-target_energy)
    scale = 1.0 / nu ** 2
    index = np.arange(nx * ny).reshape(nx, ny)

    wall = wall_energy_ratio * (y / alpha) ** (4 * int(N))
    diagonal = (scale * (np.repeat(_x_diagonal(nx, hx, kappa), ny) + 2.0 / hy ** 2)
                + np.tile(wall, nx))

    # Peierls factor on the link (i, j) -> (i + 1, j)
    if magnetic:
        link = np.exp(-1j * nu * (y - gauge_shift) * hx)
    else:
        link = np.ones(ny, dtype=complex)
    x_values = -scale * np.outer(_x_coupling(nx, hx), link)
    y_values = np.full((nx, ny - 1), -scale / hy ** 2, dtype=complex)

    rows = np.concatenate([index[:-1].ravel(), index[:, :-1].ravel()])
    cols = np.concatenate([index[1:].ravel(), index[:, 1:].ravel()])
    values = np.concatenate([x_values.ravel(), y_values.ravel()])
    upper = sp.coo_matrix((values, (rows, cols)), shape=(nx * ny, nx * ny)).tocsr()
    operator = (sp.diags(diagonal.astype(complex)) + upper + upper.conj().T).tocsr()

    logger.info(f"Built {nx}x{ny} problem at alpha={alpha:.6g}, nu={nu:.6g}, "
                f"u0/|E|={wall_energy_ratio:.6g}, N={N}, magnetic={magnetic}")
    return DiscreteProblem(grid=grid, nu=nu, alpha=alpha, wall_energy_ratio=wall_energy_ratio,
                           wall_exponent=int(N), operator=operator, target_energy=target_energy,
                           magnetic=magnetic, gauge_shift=gauge_shift)


def build_control_problem(nu: float, x_max: float, nx: int, target_energy: float = -1.0) -> DiscreteProblem:
    """Zero-field 1D Robin problem; ground state exp(-kappa x), energy -kappa^2/nu^2"""
    if not nu > 0:
        raise DomainError(f"must be positive, got {nu!r}", field='nu')
    if not target_energy < 0:
        raise DomainError(f"must be negative, got {target_energy!r}", field='target_energy')
    grid = GridSpec(nx=nx, ny=6, x_max=x_max, y_max=1.0)
    grid.clean()
    kappa = nu * math.sqrt(-target_energy)
    scale = 1.0 / nu ** 2
    coupling = -scale * _x_coupling(nx, grid.hx)
    operator = sp.diags([coupling, scale * _x_diagonal(nx, grid.hx, kappa), coupling],
                        offsets=[-1, 0, 1], format='csr')
    return DiscreteProblem(grid=grid, nu=nu, alpha=1.0, wall_energy_ratio=0.0, wall_exponent=1,
                           operator=operator, target_energy=target_energy, magnetic=False,
                           one_dimensional=True)


def _rebuild(problem: DiscreteProblem, target_energy: float) -> DiscreteProblem:
    if problem.one_dimensional:
        return build_control_problem(problem.nu, problem.grid.x_max, problem.grid.nx, target_energy)
    return build_problem(problem.nu, problem.alpha, problem.wall_energy_ratio, problem.wall_exponent,
                         problem.grid, magnetic=problem.magnetic, gauge_shift=problem.gauge_shift,
                         target_energy=target_energy, check=False)


def hermiticity_residual(problem: DiscreteProblem, seed: int = 0) -> float:
    """|<phi, H psi> - <H phi, psi>| relative to ||H||_1 ||phi|| ||psi||"""
    rng = np.random.default_rng(seed)
    n = problem.size
    phi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    H = problem.operator
    gap = abs(np.vdot(phi, H @ psi) - np.vdot(H @ phi, psi))
    return float(gap / (spla.norm(H, 1) * np.linalg.norm(phi) * np.linalg.norm(psi)))


def _inner_solver(matrix: sp.csc_matrix, method: str):
    """Solver for (H - shift) z = b"""
    if method == 'splu':
        return spla.splu(matrix).solve
    if method != 'ilu-gmres':
        raise DomainError(f"unknown inner solver '{method}'", field='ER_INNER_SOLVER')
    try:
        ilu = spla.spilu(matrix, drop_tol=1e-6, fill_factor=30)
    except RuntimeError as e:
        logger.warning(f"Incomplete factorization failed ({e}); using a complete one")
        return spla.splu(matrix).solve
    preconditioner = spla.LinearOperator(matrix.shape, matvec=ilu.solve, dtype=matrix.dtype)
    fallback = []

    def solve(b):
        if fallback:
            return fallback[0](b)
        z, info = spla.gmres(matrix, b, M=preconditioner, rtol=1e-12, atol=0.0,
                             restart=60, maxiter=50)
        if info != 0:
            logger.warning(f"GMRES stopped with info={info}; switching to a complete factorization")
            fallback.append(spla.splu(matrix).solve)
            return fallback[0](b)
        return z

    return solve


def _inverse_iteration(problem: DiscreteProblem, shift: float, tol: float, maxiter: int,
                       method: str) -> EigenSolution:
    H = problem.operator
    n = problem.size
    shifted = (H - shift * sp.identity(n, dtype=H.dtype, format='csr')).tocsc()
    solve = _inner_solver(shifted, method)

    v = np.ones(n, dtype=H.dtype) / math.sqrt(n)
    history = []
    for iteration in range(1, maxiter + 1):
        z = solve(v)
        v = z / np.linalg.norm(z)
        Hv = H @ v
        rayleigh = np.vdot(v, Hv)
        residual = float(np.linalg.norm(Hv - rayleigh.real * v))
        history.append(residual)
        logger.debug(f"Inverse iteration {iteration}: E={rayleigh.real:.12g}, residual={residual:.3e}")
        if residual < tol * max(1.0, abs(rayleigh)):
            break
    else:
        raise NumericError(f"inverse iteration did not converge in {maxiter} iterations "
                           f"(last residual {history[-1]:.3e})", history=history)

    psi = (v / np.sqrt(problem.mass_weights())).reshape(problem.shape)
    anchor = psi[0] if problem.one_dimensional else psi[0, problem.grid.center_row]
    if abs(anchor) > 0:
        psi = psi * (np.conj(anchor) / abs(anchor))
    return EigenSolution(problem=problem, eigenvalue=float(rayleigh.real), psi=psi,
                         residual=residual, iterations=iteration, history=history,
                         imaginary_part=float(rayleigh.imag))


def _match_energy(problem: DiscreteProblem, solution: EigenSolution, tol: float, maxiter: int,
                  inner: str, max_updates: int, consistency_tol: float) -> EigenSolution:
    """Retune the Robin coefficient until the computed energy equals the nominal one

    E1(t) is close to t plus the transverse zero-point energy for a Robin target t;
    a safeguarded secant on t solves E1(t) = nominal.
    """
    nominal = problem.target_energy
    targets, energies = [nominal], [solution.eigenvalue]
    for update in range(max_updates + 1):
        if abs(energies[-1] - nominal) < consistency_tol:
            break
        if update == max_updates:
            raise NumericError(f"energy did not settle on {nominal:.6g} in {max_updates} Robin updates",
                               history=energies)
        slope = 1.0
        if len(targets) > 1:
            slope = (energies[-1] - energies[-2]) / (targets[-1] - targets[-2])
            if not 0.1 < slope < 10.0:
                slope = 1.0
        target = targets[-1] - (energies[-1] - nominal) / slope
        if not target < 0:
            raise NumericError(f"Robin update needs a negative target, got {target:.6g}", history=energies)
        problem = _rebuild(problem, target)
        solution = _inverse_iteration(problem, nominal, tol, maxiter, inner)
        targets.append(target)
        energies.append(solution.eigenvalue)
        logger.debug(f"Robin update {update + 1}: target {target:.12g}, E1 {solution.eigenvalue:.12g}")
    logger.info(f"Energy matched at {solution.eigenvalue:.12g} with Robin coefficient "
                f"{problem.robin_coefficient:.12g} after {len(energies)} solves")
    return solution


def solve_ground(problem: DiscreteProblem, shift: float = -1.0, tol: Optional[float] = None,
                 maxiter: Optional[int] = None, self_consistent: bool = False,
                 inner: Optional[str] = None, max_updates: int = 20,
                 consistency_tol: float = 1e-9) -> EigenSolution:
    """Eigenpair nearest `shift` by shift-invert inverse iteration

    With self_consistent the Robin coefficient is retuned until the computed
    energy equals the problem's target energy to consistency_tol.
    """
    tol = settings.ER_SOLVER_TOL if tol is None else tol
    maxiter = settings.ER_SOLVER_MAXITER if maxiter is None else maxiter
    inner = settings.ER_INNER_SOLVER if inner is None else inner

    solution = _inverse_iteration(problem, shift, tol, maxiter, inner)
    if self_consistent:
        solution = _match_energy(problem, solution, tol, maxiter, inner, max_updates, consistency_tol)

    logger.info(f"Ground state E1={solution.eigenvalue:.12g} after {solution.iterations} iterations "
                f"(residual {solution.residual:.3e})")
    return solution


def axis_log_slope(solution: EigenSolution, x_lo: float, x_hi: float) -> float:
    """Least-squares slope of ln|psi(x, 0)| on [x_lo, x_hi]"""
    grid = solution.problem.grid
    x = grid.x_nodes()
    axis = solution.psi if solution.problem.one_dimensional else solution.psi[:, grid.center_row]
    window = (x >= x_lo) & (x <= x_hi)
    return float(np.polyfit(x[window], np.log(np.abs(axis[window])), 1)[0])


def measure_suppression(solution: EigenSolution) -> float:
    """|psi(Delta x, 0)|^2 / |psi(0, 0)|^2"""
    grid = solution.problem.grid
    axis = np.abs(solution.psi[:, grid.center_row])
    log_at_period = np.interp(period(solution.problem.alpha), grid.x_nodes(), np.log(axis))
    return float(np.exp(2.0 * (log_at_period - np.log(axis[0]))))


def _y_curvature(column: np.ndarray, row: int, hy: float) -> float:
    f = column[row - 2:row + 3]
    return float((-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12.0 * hy ** 2))


def compare_semiclassics(solution: EigenSolution, alpha: Optional[float] = None,
                         nu: Optional[float] = None,
                         loop_half_width: Optional[float] = None) -> SemiclassicalReport:
    problem = solution.problem
    alpha = problem.alpha if alpha is None else alpha
    nu = problem.nu if nu is None else nu
    grid = problem.grid
    field = solution.grid_field()
    x = grid.x_nodes()
    half = 0.5 * period(alpha)
    comparisons = []

    # decay along the axis inside region 0
    window = (x >= 0.1 * half) & (x <= 0.6 * half)
    sigma, _ = action_arrays(x[window], np.zeros(window.sum()), alpha)
    predicted_slope = float(np.polyfit(x[window], -nu * sigma.real, 1)[0])
    measured_slope = axis_log_slope(solution, 0.1 * half, 0.6 * half)
    comparisons.append(Comparison(
        name='decay_slope', measured=measured_slope, predicted=predicted_slope,
        tolerance='10% relative', passed=abs(measured_slope / predicted_slope - 1.0) <= 0.10,
    ))

    nodes = detect_nodes(field)
    first = nodes[0] if nodes else None
    comparisons.append(Comparison(
        name='first_node', measured=first, predicted=half, tolerance='5% relative',
        passed=first is not None and abs(first / half - 1.0) <= 0.05,
        detail=f"{len(nodes)} nodes on the axis", needs_semiclassical=True,
    ))

    # disjoining: |psi| curvature across the axis
    modulus = np.abs(solution.psi)
    row = grid.center_row
    core = first if first is not None else half
    delta = 1.0 / (alpha * nu)
    near = [_y_curvature(modulus[int(np.argmin(np.abs(x - xc)))], row, grid.hy)
            for xc in (core - 0.5 * delta, core + 0.5 * delta)]
    origin = _y_curvature(modulus[0], row, grid.hy)
    comparisons.append(Comparison(
        name='disjoining', measured=min(near), predicted=None,
        tolerance='positive near the node, negative at x = 0',
        passed=min(near) > 0 and origin < 0,
        detail=f"curvature near node {near[0]:.6g}, {near[1]:.6g}; at x=0 {origin:.6g}",
    ))

    if loop_half_width is None:
        loop_half_width = min(0.45, 0.25 * period(alpha), 0.8 * grid.y_max)
    winding = None
    try:
        loop = circulation(field, square_loop((core, 0.0), loop_half_width))
        winding = loop.winding
        comparisons.append(Comparison(
            name='winding', measured=float(winding), predicted=1.0, tolerance='|w| = 1',
            passed=abs(winding) == 1, detail=f"raw winding {loop.winding_raw:.6f}",
        ))
        comparisons.append(Comparison(
            name='gauge_identity', measured=loop.gauge_residual, predicted=0.0,
            tolerance='1e-3 of the circulation',
            passed=abs(loop.gauge_residual) <= 1e-3 * abs(loop.circulation),
            detail=f"circulation {loop.circulation:.10g}, enclosed flux {loop.enclosed_flux:.10g}, "
                   f"2 Phi0 = {2 * loop.flux_quantum:.10g}",
        ))
    except EngineError as e:
        comparisons.append(Comparison(name='winding', measured=None, predicted=1.0,
                                      tolerance='|w| = 1', passed=False, detail=str(e)))

    action = hard_wall_action(alpha, nu)
    measured_log = math.log(measure_suppression(solution))
    comparisons.append(Comparison(
        name='suppression', measured=measured_log, predicted=-action.total,
        tolerance='log ratio within [0.7, 1.3]',
        passed=action.total > 0 and 0.7 <= measured_log / -action.total <= 1.3,
        needs_semiclassical=True,
    ))

    comparisons.append(Comparison(
        name='eigenvalue', measured=solution.eigenvalue, predicted=-1.0, tolerance='5% of |E|',
        passed=solution.deviation <= 0.05, detail=f"|E1 + 1| = {solution.deviation:.6g}",
        needs_semiclassical=True,
    ))

    validity = validate_reduced(alpha, nu, problem.wall_exponent)
    conditions = [validity.get(name) for name in SEMICLASSICAL_CONDITIONS]
    report = SemiclassicalReport(
        alpha=alpha, nu=nu, eigenvalue=solution.eigenvalue, comparisons=comparisons,
        semiclassical=all(check.status == 'pass' for check in conditions),
        regime='; '.join(f"{check.description}: ratio {check.ratio:.3g} ({check.status})"
                         for check in conditions),
    )
    for item in report.comparisons:
        if item.passed:
            continue
        if report.gates(item):
            logger.warning(f"Comparison {item.name} failed: measured {item.measured}, "
                           f"predicted {item.predicted} ({item.tolerance})")
        else:
            logger.info(f"Comparison {item.name} outside the semiclassical regime ({report.regime}): "
                        f"measured {item.measured}, predicted {item.predicted}")
    return report


def scan_point(alpha: float, nu: float, N: int, wall_energy_ratio: float,
               policy: str = 'fixed-spacing', nx: Optional[int] = None,
               ny: Optional[int] = None, strict: bool = False) -> ScanRow:
    """One row of the resonance scan; failures land in the row, strict re-raises NumericError"""
    action = hard_wall_action(alpha, nu)
    grid = grid_for(alpha, nu, N, policy, nx, ny)
    try:
        problem = build_problem(nu, alpha, wall_energy_ratio, N, grid)
        solution = solve_ground(problem)
    except (DomainError, NumericError) as e:
        if strict and isinstance(e, NumericError):
            raise
        logger.error(f"Scan point alpha={alpha:.6g} failed: {e}")
        return ScanRow(alpha=alpha, nu=nu, nx=grid.nx, ny=grid.ny, eigenvalue=None, measured=None,
                       predicted=action.suppression, log_ratio=None, status='error', error=str(e))
    measured = measure_suppression(solution)
    log_ratio = math.log(measured) / -action.total if action.total > 1e-12 else None
    return ScanRow(alpha=alpha, nu=nu, nx=grid.nx, ny=grid.ny, eigenvalue=solution.eigenvalue,
                   measured=measured, predicted=action.suppression, log_ratio=log_ratio)


def resonance_scan(nu: float, alphas: Sequence[float], policy: str = 'fixed-spacing',
                   N: Optional[int] = None, wall_energy_ratio: Optional[float] = None,
                   n_jobs: Optional[int] = None) -> List[ScanRow]:
    """Measured vs predicted per-period suppression over alpha, in input order"""
    N = settings.ER_DEFAULT_N if N is None else N
    wall_energy_ratio = settings.ER_DEFAULT_U0 if wall_energy_ratio is None else wall_energy_ratio
    n_jobs = settings.ER_THREADS if n_jobs is None else n_jobs
    if policy not in GRID_POLICIES:
        raise DomainError(f"unknown grid policy '{policy}'", field='policy')
    lo, hi = SCAN_RANGE
    for alpha in alphas:
        if not lo < alpha < hi:
            raise DomainError(f"scan values must lie in ({lo}, {hi}), got {alpha!r}", field='alpha')

    logger.info(f"Scanning {len(alphas)} values of alpha at nu={nu:.6g} with {n_jobs} workers")
    with threadpool_limits(limits=max(1, int(n_jobs))):
        rows = Parallel(n_jobs=n_jobs)(
            delayed(scan_point)(float(alpha), nu, N, wall_energy_ratio, policy) for alpha in alphas
        )
    return list(rows)
