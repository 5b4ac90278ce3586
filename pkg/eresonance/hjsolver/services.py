# hjsolver/services.py
"""Closed-form Hamilton-Jacobi solution in the reflectionless regions.

Units: lengths in L, energies in |E|. In region k the action is

    sigma_k(x, y) = s(u) - i u y + k C(alpha),   u = x - k Delta x,
    s(u) = (u sqrt(1 + u^2) + asinh u) / 2,

with gradient (sqrt(1 + u^2) - iy, -iu). The wavefunction is psi = exp(-nu sigma).
"""
import math
import logging
from typing import List, Optional, Tuple

import numpy as np

from core.exceptions import DomainError, RegionError
from .models import ComplexAction, RegionGeometry

logger = logging.getLogger('eresonance.hjsolver')


def _check_alpha(alpha: float):
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"must be a finite positive number, got {alpha!r}", field='alpha')


def _check_nu(nu: float):
    if not (math.isfinite(nu) and nu > 0):
        raise DomainError(f"must be a finite positive number, got {nu!r}", field='nu')


def period(alpha: float) -> float:
    _check_alpha(alpha)
    return 2.0 * math.sqrt(alpha * (2.0 + alpha))


def transverse_integral(alpha):
    """J(alpha) = int_0^alpha sqrt(eta (2 + eta)) d eta in closed form"""
    alpha = np.asarray(alpha, dtype=float)
    value = 0.5 * ((alpha + 1.0) * np.sqrt(alpha * (2.0 + alpha)) - np.arccosh(alpha + 1.0))
    return float(value) if value.ndim == 0 else value


def connection_constant(alpha: float) -> float:
    """C(alpha) = Delta x - 2 J(alpha), the action gained per region crossing"""
    return period(alpha) - 2.0 * transverse_integral(alpha)


def _longitudinal(u):
    return 0.5 * (u * np.sqrt(1.0 + u * u) + np.arcsinh(u))


def region_index(x: float, y: float, alpha: float) -> Optional[int]:
    """Index k of the region strictly containing (x, y), or None"""
    _check_alpha(alpha)
    geometry = RegionGeometry(alpha)
    k0 = max(int(math.floor(x / geometry.period)), 0)
    for k in (k0, k0 + 1):
        if geometry.contains(x, y, k):
            return k
    return None


def region_indices(x, y, alpha: float) -> np.ndarray:
    """Vectorized region_index; -1 marks points outside every region"""
    _check_alpha(alpha)
    geometry = RegionGeometry(alpha)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    k0 = np.maximum(np.floor(x / geometry.period), 0).astype(int)
    out = np.full(x.shape, -1, dtype=int)
    for k in (k0 + 1, k0):
        inside = geometry.contains(x, y, k)
        out = np.where(inside, k, out)
    return out


def strip_membership(y, alpha: float):
    """Membership in the rectangular-wall limit, y^2 < alpha^2 for every x"""
    _check_alpha(alpha)
    return np.asarray(y, dtype=float) ** 2 < alpha ** 2


def action(x: float, y: float, alpha: float) -> ComplexAction:
    k = region_index(x, y, alpha)
    if k is None:
        raise RegionError(f"point ({x:.6g}, {y:.6g}) is outside every region at alpha={alpha:.6g}")
    u = x - k * period(alpha)
    root = math.sqrt(1.0 + u * u)
    sigma = complex(_longitudinal(u) + k * connection_constant(alpha), -u * y)
    return ComplexAction(
        sigma=sigma,
        grad=(complex(root, -y), complex(0.0, -u)),
        region_index=k,
        on_valid_region=True,
        y=y,
    )


def action_arrays(x, y, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """sigma on arrays of points; NaN where the region index is -1"""
    k = region_indices(x, y, alpha)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    u = x - k * period(alpha)
    sigma = _longitudinal(u) + k * connection_constant(alpha) - 1j * u * y
    sigma = np.where(k >= 0, sigma, np.nan + 1j * np.nan)
    return sigma, k


def modulus_ratio(x: float, alpha: float, nu: float) -> float:
    """|psi(x, 0) / psi(0, 0)| = exp(-nu Re sigma_k(x, 0))"""
    _check_nu(nu)
    return math.exp(-nu * action(x, 0.0, alpha).sigma.real)


def logarithmic_profile(x, nu: float):
    """Logarithmic decay law exp(-nu asinh x) of region 0"""
    _check_nu(nu)
    value = np.exp(-nu * np.arcsinh(np.asarray(x, dtype=float)))
    return float(value) if value.ndim == 0 else value


def phase(x: float, y: float, alpha: float, nu: float) -> float:
    """chi = -nu Im sigma, odd in y"""
    _check_nu(nu)
    return -nu * action(x, y, alpha).sigma.imag


def boundary_curves(alpha: float, periods: int = 3, points: int = 201) -> List[Tuple[int, np.ndarray, np.ndarray]]:
    """Closed boundary polygon (k, x, y) of each of the first regions"""
    _check_alpha(alpha)
    if periods < 1 or points < 3:
        raise DomainError(f"need periods >= 1 and points >= 3, got {periods}, {points}", field='points')
    half = 0.5 * period(alpha)
    # cosine spacing clusters samples near the cusps at u = +-half
    u = half * np.cos(np.linspace(np.pi, 0.0, points))
    upper = np.sqrt(np.clip(alpha ** 2 - (np.sqrt(1.0 + u * u) - 1.0) ** 2, 0.0, None))
    upper[0] = upper[-1] = 0.0
    curves = []
    for k in range(periods):
        xs = np.concatenate([u, u[-2::-1]]) + k * 2.0 * half
        ys = np.concatenate([upper, -upper[-2::-1]])
        curves.append((k, xs, ys))
    logger.debug(f"Built {periods} boundary curves at alpha={alpha:.6g}")
    return curves
