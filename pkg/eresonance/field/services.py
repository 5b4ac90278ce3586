# field/services.py
import math
import logging
from typing import Iterator, List, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from core.exceptions import CoverageError, DomainError, NumericError
from core.models import GridSpec
from hjsolver.services import action_arrays, period, region_indices
from .models import GridField, LoopIntegral, VortexRecord

logger = logging.getLogger('eresonance.field')

FIELD_COLUMNS = ('x', 'y', 're_psi', 'im_psi', 'abs_psi', 'chi', 'Qx', 'Qy', 'region')
CURRENT_COLUMNS = ('x', 'y', 'jx', 'jy')

# Loop refinement stops after this many doublings of an edge
MAX_REFINEMENTS = 16


def assemble_field(grid: GridSpec, alpha: float, nu: float) -> GridField:
    """Semiclassical psi = exp(-nu sigma) on every node inside a region"""
    grid.clean()
    if not nu > 0:
        raise DomainError(f"must be positive, got {nu!r}", field='nu')
    X, Y = grid.mesh()
    sigma, region = action_arrays(X, Y, alpha)
    valid = region >= 0

    psi = np.full(grid.shape, np.nan + 1j * np.nan)
    psi[valid] = np.exp(-nu * sigma[valid])

    # chi = nu u y with u = x - k Delta x
    u = X - region * period(alpha)
    chi = np.where(valid, nu * u * Y, np.nan)
    chi_gradient = (np.where(valid, nu * Y, np.nan), np.where(valid, nu * u, np.nan))

    logger.info(f"Assembled semiclassical field {grid.nx}x{grid.ny - 1} at alpha={alpha:.6g}, "
                f"nu={nu:.6g}: {int(valid.sum())} valid nodes")
    return GridField(grid=grid, psi=psi, region=region, valid=valid, alpha=alpha, nu=nu,
                     source='semiclassical', chi=chi, chi_gradient=chi_gradient)


def _phase_derivative(psi: np.ndarray, h: float, axis: int) -> np.ndarray:
    """d(arg psi)/ds from phase increments, central inside, one-sided at the ends"""
    psi = np.moveaxis(psi, axis, 0)
    out = np.empty(psi.shape)
    out[1:-1] = np.angle(psi[2:] * np.conj(psi[:-2])) / (2.0 * h)
    out[0] = np.angle(psi[1] * np.conj(psi[0])) / h
    out[-1] = np.angle(psi[-1] * np.conj(psi[-2])) / h
    return np.moveaxis(out, 0, axis)


def phase_gradient(field: GridField) -> Tuple[np.ndarray, np.ndarray]:
    if field.chi_gradient is not None:
        return field.chi_gradient
    grid = field.grid
    return _phase_derivative(field.psi, grid.hx, 0), _phase_derivative(field.psi, grid.hy, 1)


def gauge_invariant_Q(field: GridField) -> Tuple[np.ndarray, np.ndarray]:
    """Q = A + H l^2 grad chi in units of H L; NaN on invalid nodes"""
    X, Y = field.grid.mesh()
    chi_x, chi_y = phase_gradient(field)
    Qx = -(Y - field.gauge_shift) + chi_x / field.nu
    Qy = chi_y / field.nu
    return np.where(field.valid, Qx, np.nan), np.where(field.valid, Qy, np.nan)


def current(field: GridField) -> Tuple[np.ndarray, np.ndarray]:
    """j = -|psi|^2 Q in reduced units"""
    Qx, Qy = gauge_invariant_Q(field)
    density = np.abs(field.psi) ** 2
    return -density * Qx, -density * Qy


def square_loop(center: Sequence[float], half_width: float, clockwise: bool = False) -> np.ndarray:
    if not half_width > 0:
        raise DomainError(f"must be positive, got {half_width!r}", field='half_width')
    cx, cy = center
    d = half_width
    vertices = np.array([[cx - d, cy - d], [cx + d, cy - d], [cx + d, cy + d], [cx - d, cy + d]])
    return vertices[::-1].copy() if clockwise else vertices


def _interpolators(field: GridField):
    points = (field.x, field.y)
    psi = np.where(field.valid, field.psi, np.nan + 1j * np.nan)
    options = dict(method='linear', bounds_error=False, fill_value=np.nan)
    return (RegularGridInterpolator(points, psi.real, **options),
            RegularGridInterpolator(points, psi.imag, **options))


def _sample(interpolators, points: np.ndarray) -> np.ndarray:
    re, im = interpolators
    return re(points) + 1j * im(points)


def _refine_edge(interpolators, a: np.ndarray, b: np.ndarray, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Points along a -> b with every phase step below pi/2"""
    for _ in range(MAX_REFINEMENTS):
        t = np.linspace(0.0, 1.0, count + 1)[:, None]
        points = a + t * (b - a)
        values = _sample(interpolators, points)
        if np.any(np.isnan(values)):
            raise CoverageError(
                f"loop edge ({a[0]:.4g}, {a[1]:.4g}) -> ({b[0]:.4g}, {b[1]:.4g}) "
                f"leaves the valid part of the field"
            )
        steps = np.angle(values[1:] * np.conj(values[:-1]))
        if np.all(np.abs(steps) < 0.5 * math.pi):
            return points, values
        count *= 2
    raise NumericError(f"loop edge could not be refined below pi/2 phase steps after {count} segments")


def enclosed_area(vertices: np.ndarray) -> float:
    """Signed shoelace area, positive counter-clockwise"""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def circulation(field: GridField, loop: np.ndarray) -> LoopIntegral:
    """Circulation of Q, winding number and enclosed flux around a closed polygon"""
    vertices = np.asarray(loop, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
        raise DomainError("loop needs at least three (x, y) vertices", field='loop')
    interpolators = _interpolators(field)
    h = min(field.grid.hx, field.grid.hy)

    total_phase = 0.0
    potential_part = 0.0
    segments = 0
    for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
        count = max(int(math.ceil(np.hypot(*(b - a)) / h)), 1)
        points, values = _refine_edge(interpolators, a, b, count)
        steps = np.angle(values[1:] * np.conj(values[:-1]))
        total_phase += float(np.sum(steps))
        # -(y - y0) dx is exact at the midpoint on straight segments
        y_mid = 0.5 * (points[1:, 1] + points[:-1, 1])
        potential_part += float(np.sum(-(y_mid - field.gauge_shift) * np.diff(points[:, 0])))
        segments += len(steps)

    winding_raw = total_phase / (2.0 * math.pi)
    winding = int(round(winding_raw))
    result = LoopIntegral(
        circulation=potential_part + total_phase / field.nu,
        winding=winding,
        winding_raw=winding_raw,
        enclosed_flux=enclosed_area(vertices),
        nu=field.nu,
        vertices=vertices,
        segments=segments,
    )
    logger.debug(f"Loop with {segments} segments: winding {winding_raw:.6f}, "
                 f"circulation {result.circulation:.10g}, flux {result.enclosed_flux:.10g}")
    return result


def detect_nodes(field: GridField) -> List[float]:
    """Zeros of Re psi(x, 0) located by linear interpolation between nodes"""
    values = field.axis.real
    ok = field.valid[:, field.grid.center_row]
    x = field.x
    nodes = []
    for i in range(len(values) - 1):
        if not (ok[i] and ok[i + 1]):
            continue
        a, b = values[i], values[i + 1]
        if a == 0.0:
            nodes.append(float(x[i]))
        elif a * b < 0:
            nodes.append(float(x[i] - a * (x[i + 1] - x[i]) / (b - a)))
    return nodes


def vortex_records(field: GridField, half_width: float) -> List[VortexRecord]:
    records = []
    for x_node in detect_nodes(field):
        try:
            loop = circulation(field, square_loop((x_node, 0.0), half_width))
        except CoverageError as e:
            logger.warning(f"Skipping node at x={x_node:.6g}: {e}")
            continue
        records.append(VortexRecord(x=x_node, y=0.0, loop=loop))
    return records


def _cell(value, masked: bool):
    return None if masked else value


def field_rows(field: GridField) -> Iterator[tuple]:
    """Rows of FIELD_COLUMNS, x slowest, y fastest; masked cells are None"""
    Qx, Qy = gauge_invariant_Q(field)
    chi = field.phase
    x, y = field.x, field.y
    for i in range(field.grid.nx):
        for j in range(field.grid.ny - 1):
            masked = not field.valid[i, j]
            value = field.psi[i, j]
            region = int(field.region[i, j])
            yield (
                x[i], y[j],
                _cell(value.real, masked), _cell(value.imag, masked), _cell(abs(value), masked),
                _cell(chi[i, j], masked), _cell(Qx[i, j], masked), _cell(Qy[i, j], masked),
                None if region < 0 else region,
            )


def current_rows(field: GridField) -> Iterator[tuple]:
    jx, jy = current(field)
    x, y = field.x, field.y
    for i in range(field.grid.nx):
        for j in range(field.grid.ny - 1):
            masked = not field.valid[i, j]
            yield x[i], y[j], _cell(jx[i, j], masked), _cell(jy[i, j], masked)


def regions_for(grid: GridSpec, alpha: float) -> np.ndarray:
    X, Y = grid.mesh()
    return region_indices(X, Y, alpha)
