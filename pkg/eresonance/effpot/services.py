# effpot/services.py
"""Effective 1D potential along y = 0 and a finite-difference level finder

Units: x in L, U and energies in |E|, kinetic coefficient 1/nu^2. Two
extractions are offered, both equal to the same U on an exact eigenfunction:

    transverse:   U = (1/nu^2) [chi_y^2 - |psi|_yy / |psi|]
    longitudinal: U = E + (1/nu^2) |psi|_xx / |psi|
"""
import math
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.ndimage import maximum_filter1d
from scipy.optimize import brentq

from core.exceptions import DomainError, ResolutionError
from field.models import GridField
from field.services import detect_nodes
from hjsolver.models import RegionGeometry
from hjsolver.services import period
from .models import (
    HIGH_FIELD, LONGITUDINAL, PIECEWISE, SEMICLASSICAL, TRANSVERSE,
    DepthSweep, EffectivePotentialProfile, PotentialExtraction,
)

logger = logging.getLogger('eresonance.effpot')

PROFILE_COLUMNS = ('x', 'U', 'variant', 'masked')

# Samples of the high-field form with |cos| below this are masked
POLE_MASK = 1e-3
# Samples below this fraction of the local max|psi(x, 0)| are singular
NODE_FLOOR = 1e-8


def _second_difference(f: np.ndarray, h: float) -> np.ndarray:
    """5-point second derivative along axis 0, NaN on the two edge samples"""
    out = np.full(f.shape, np.nan)
    out[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12.0 * h ** 2)
    return out


def _first_difference(f: np.ndarray, h: float) -> np.ndarray:
    out = np.full(f.shape, np.nan)
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12.0 * h)
    return out


def longitudinal_potential(x: np.ndarray, modulus: np.ndarray, energy: float, nu: float) -> np.ndarray:
    """E + |psi|_xx / (nu^2 |psi|) on uniformly spaced samples"""
    h = float(x[1] - x[0])
    with np.errstate(divide='ignore', invalid='ignore'):
        return energy + _second_difference(modulus, h) / (nu ** 2 * modulus)


def _check_stencil(field: GridField):
    # at least 5 nodes inside |y| < delta
    delta = 1.0 / (field.alpha * field.nu)
    required = delta / 2.0
    if field.grid.hy > required or field.grid.ny - 1 < 5:
        raise ResolutionError('vortex core scale', field.grid.hy, required, 'y')


def _node_mask(field: GridField, modulus: np.ndarray) -> np.ndarray:
    """Axis samples within one spacing of a node of psi, or negligible against their neighbourhood

    The floor is relative to the largest |psi| within one core scale.
    """
    x = field.x
    reach = max(2, int(math.ceil(1.0 / (field.alpha * field.nu * field.grid.hx))))
    local = maximum_filter1d(np.nan_to_num(modulus, nan=0.0), size=2 * reach + 1, mode='nearest')
    mask = ~(modulus > NODE_FLOOR * local)
    for x_node in detect_nodes(field):
        mask |= np.abs(x - x_node) < field.grid.hx
    return mask


def extract_U(field: GridField, energy: Optional[float] = None) -> PotentialExtraction:
    """Both extractions of U(x) along the axis of a grid field

    `energy` defaults to -1 (the semiclassical level); pass the eigenvalue
    for oracle fields. Samples at nodes of psi or at invalid nodes are NaN.
    """
    _check_stencil(field)
    energy = -1.0 if energy is None else float(energy)
    grid, nu = field.grid, field.nu
    row = grid.center_row
    rows = slice(row - 2, row + 3)

    stencil = field.psi[:, rows]
    modulus = np.abs(stencil)
    if field.chi is not None:
        chi = field.chi[:, rows]
    else:
        chi = np.unwrap(np.angle(stencil), axis=1)
    f = modulus
    curvature = (-f[:, 0] + 16 * f[:, 1] - 30 * f[:, 2] + 16 * f[:, 3] - f[:, 4]) / (12.0 * grid.hy ** 2)
    chi_y = (chi[:, 0] - 8 * chi[:, 1] + 8 * chi[:, 3] - chi[:, 4]) / (12.0 * grid.hy)

    axis = modulus[:, 2]
    with np.errstate(divide='ignore', invalid='ignore'):
        transverse = (chi_y ** 2 - curvature / axis) / nu ** 2
    longitudinal = longitudinal_potential(field.x, axis, energy, nu)

    valid = np.all(field.valid[:, rows], axis=1)
    masked = ~valid | _node_mask(field, np.where(valid, axis, np.nan))
    transverse[masked] = np.nan
    longitudinal[masked] = np.nan
    # the 5-point x stencil needs two valid neighbours on each side
    spread = np.convolve(masked.astype(int), np.ones(5, dtype=int), mode='same') > 0
    longitudinal[spread] = np.nan

    singular = detect_nodes(field)
    kinetic = 1.0 / nu ** 2
    logger.info(f"Extracted U(x) from {field.source} field: {int(np.isfinite(transverse).sum())} "
                f"transverse and {int(np.isfinite(longitudinal).sum())} longitudinal samples, "
                f"{len(singular)} nodes")
    return PotentialExtraction(
        transverse=EffectivePotentialProfile(field.x.copy(), transverse, TRANSVERSE, kinetic, singular),
        longitudinal=EffectivePotentialProfile(field.x.copy(), longitudinal, LONGITUDINAL, kinetic,
                                               list(singular)),
        energy=energy,
    )


def high_field_shift(vortex_x: float, a: float, l: float) -> float:
    """x0 putting a pole of the high-field form on vortex_x"""
    return vortex_x - math.pi * l ** 2 / a


def high_field_potential(x, omega_c: float, a: float, l: float, x0: float,
                         mass: float = 1.0) -> EffectivePotentialProfile:
    """U = (m omega_c^2 a^2 / 4) [1 + sqrt(3) tan(a (x - x0) / 2 l^2)], poles masked"""
    for name, value in (('omega_c', omega_c), ('a', a), ('l', l), ('mass', mass)):
        if not value > 0:
            raise DomainError(f"must be positive, got {value!r}", field=name)
    x = np.asarray(x, dtype=float)
    argument = a * (x - x0) / (2.0 * l ** 2)
    scale = mass * omega_c ** 2 * a ** 2 / 4.0
    U = scale * (1.0 + math.sqrt(3.0) * np.tan(argument))
    U[np.abs(np.cos(argument)) < POLE_MASK] = np.nan

    # poles at argument = pi/2 + k pi
    spacing = 2.0 * math.pi * l ** 2 / a
    first = x0 + math.pi * l ** 2 / a
    lo, hi = float(x.min()), float(x.max())
    k_lo = math.ceil((lo - first) / spacing)
    k_hi = math.floor((hi - first) / spacing)
    poles = [first + k * spacing for k in range(k_lo, k_hi + 1)]
    return EffectivePotentialProfile(x=x, U=U, variant=HIGH_FIELD, kinetic=1.0 / (mass * omega_c) ** 2,
                                     singular_points=poles, shift=x0)


def reduced_high_field_potential(x, alpha: float, nu: float,
                                 x0: float) -> EffectivePotentialProfile:
    """High-field form with L = m = |E| = 1: omega_c = sqrt(2), a = alpha, l = 1/sqrt(nu)"""
    profile = high_field_potential(x, math.sqrt(2.0), alpha, 1.0 / math.sqrt(nu), x0)
    profile.kinetic = 1.0 / nu ** 2
    return profile


def semiclassical_potential(alpha: float, x) -> EffectivePotentialProfile:
    """U = (x - k Delta x)^2 on the cell ((k - 1/2) Delta x, (k + 1/2) Delta x)"""
    dx = period(alpha)
    geometry = RegionGeometry(alpha)
    x = np.asarray(x, dtype=float)
    k = geometry.cell_index(x)
    cores = geometry.cores(int(k.max() - k.min()), start=int(k.min()))
    return EffectivePotentialProfile(x=x, U=(x - k * dx) ** 2, variant=SEMICLASSICAL,
                                     singular_points=[float(c) for c in cores])


def piecewise_potential(alpha: float, nu: float, depth: Optional[float] = None, periods: int = 3,
                        points: int = 4000) -> EffectivePotentialProfile:
    """Parabolic cells joined at the cores by square wells of width delta and depth `depth`

    Cells k = 0 .. periods-1 cover [-Delta x/2, (periods - 1/2) Delta x];
    wells sit on the interior cores. Depth defaults to m omega_c^2 a^2 = 2 alpha^2.
    """
    if not (alpha > 0 and nu > 0):
        raise DomainError(f"alpha and nu must be positive, got {alpha!r}, {nu!r}", field='alpha')
    if int(periods) < 1:
        raise DomainError(f"must be at least 1, got {periods!r}", field='periods')
    depth = 2.0 * alpha ** 2 if depth is None else float(depth)
    if depth < 0:
        raise DomainError(f"must be non-negative, got {depth!r}", field='depth')
    dx = period(alpha)
    width = 1.0 / (alpha * nu)
    lo, hi = -0.5 * dx, (periods - 0.5) * dx
    h = (hi - lo) / points
    if h > width / 20.0:
        raise ResolutionError('well width', h, width / 20.0, 'x')
    # cell centres, so the well edges never fall on a sample
    x = lo + (np.arange(points) + 0.5) * h
    profile = semiclassical_potential(alpha, x)
    cores = RegionGeometry(alpha).cores(periods - 1)
    U = profile.U
    for core in cores:
        U[np.abs(x - core) < 0.5 * width] = -depth
    return EffectivePotentialProfile(x=x, U=U, variant=PIECEWISE, kinetic=1.0 / nu ** 2,
                                     singular_points=[float(c) for c in cores])


def _bridged(profile: EffectivePotentialProfile, domain: Optional[Tuple[float, float]]):
    x, U = profile.x, profile.U
    if domain is not None:
        keep = (x >= domain[0]) & (x <= domain[1])
        x, U = x[keep], U[keep]
    if len(x) < 3:
        raise DomainError(f"needs at least 3 samples, got {len(x)}", field='domain')
    finite = np.isfinite(U)
    if not finite.any():
        raise DomainError("every sample is masked", field='domain')
    if not finite.all():
        U = U.copy()
        U[~finite] = np.interp(x[~finite], x[finite], U[finite])
    steps = np.diff(x)
    if not np.allclose(steps, steps[0], rtol=1e-8, atol=0.0):
        raise DomainError("samples must be uniformly spaced", field='x')
    return x, U, float(steps[0])


def levels_1d(profile: EffectivePotentialProfile, window: Tuple[float, float],
              domain: Optional[Tuple[float, float]] = None,
              kinetic: Optional[float] = None) -> List[float]:
    """Dirichlet finite-difference eigenvalues of -k d^2/dx^2 + U in (window[0], window[1]]

    Masked samples are bridged linearly; Dirichlet nodes sit one spacing
    beyond the first and last sample.
    """
    lo, hi = window
    if not hi > lo:
        return []
    x, U, h = _bridged(profile, domain)
    kinetic = profile.kinetic if kinetic is None else kinetic
    diagonal = 2.0 * kinetic / h ** 2 + U
    off = np.full(len(x) - 1, -kinetic / h ** 2)
    values = eigvalsh_tridiagonal(diagonal, off, select='v', select_range=(lo, hi))
    logger.debug(f"{len(values)} levels in ({lo:.6g}, {hi:.6g}] from {len(x)} samples")
    return [float(v) for v in values]


def count_below(profile: EffectivePotentialProfile, target: float,
                domain: Optional[Tuple[float, float]] = None) -> int:
    x, U, _ = _bridged(profile, domain)
    floor = float(np.min(U)) - 1.0
    return len(levels_1d(profile, (floor, target), domain))


def level_coincidence(levels: Sequence[float], target: float = -1.0,
                      tolerance: float = 0.05) -> dict:
    """Nearest level to `target` and whether it lies within `tolerance`"""
    if not len(levels):
        return {'target': target, 'tolerance': tolerance, 'nearest': None,
                'distance': None, 'coincident': False}
    nearest = min(levels, key=lambda value: abs(value - target))
    distance = abs(nearest - target)
    return {'target': target, 'tolerance': tolerance, 'nearest': float(nearest),
            'distance': float(distance), 'coincident': bool(distance <= tolerance)}


def sweep_well_depth(alpha: float, nu: float, depths: Sequence[float], target: float = -1.0,
                     periods: int = 3, points: int = 4000, xtol: float = 1e-10) -> DepthSweep:
    """Depths at which a level of the piecewise model crosses `target`

    Deepening the wells never raises a level, so the count of levels below
    `target` is non-decreasing in depth; each unit step is located by bisection.
    """
    depths = np.sort(np.asarray(depths, dtype=float))
    if len(depths) < 2:
        raise DomainError("needs at least two depths", field='depths')

    def count(depth):
        return count_below(piecewise_potential(alpha, nu, depth, periods, points), target)

    counts = np.array([count(d) for d in depths])
    crossings = []
    for (d_lo, c_lo), (d_hi, c_hi) in zip(zip(depths[:-1], counts[:-1]), zip(depths[1:], counts[1:])):
        for level in range(c_lo, c_hi):
            # first depth where the count exceeds `level`
            a, b = d_lo, d_hi
            while b - a > xtol * max(1.0, abs(b)):
                mid = 0.5 * (a + b)
                if count(mid) > level:
                    b = mid
                else:
                    a = mid
            crossings.append(0.5 * (a + b))
    logger.info(f"Depth sweep over {len(depths)} values found {len(crossings)} crossings of {target:.6g}")
    return DepthSweep(depths=depths, counts=counts, crossings=crossings, target=target)


def finite_square_well_levels(depth: float, width: float, kinetic: float = 1.0) -> List[float]:
    """Bound states of -k psi'' + V psi with V = -depth on |x| < width/2, from the matching conditions"""
    if not (depth > 0 and width > 0 and kinetic > 0):
        raise DomainError("depth, width and kinetic must be positive", field='depth')
    z0 = 0.5 * width * math.sqrt(depth / kinetic)

    def even(z):
        return z * math.sin(z) - math.sqrt(max(z0 ** 2 - z ** 2, 0.0)) * math.cos(z)

    def odd(z):
        return z * math.cos(z) + math.sqrt(max(z0 ** 2 - z ** 2, 0.0)) * math.sin(z)

    roots = []
    j = 0
    while j * math.pi / 2.0 < z0:
        a = j * math.pi / 2.0
        b = min((j + 1) * math.pi / 2.0, z0)
        g = even if j % 2 == 0 else odd
        if g(a) == 0.0:
            roots.append(a)
        elif g(a) * g(b) < 0:
            roots.append(brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        j += 1
    return sorted(kinetic * (2.0 * z / width) ** 2 - depth for z in roots)
