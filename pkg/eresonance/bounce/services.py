# bounce/services.py
import math
import logging
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
import sympy
from scipy.integrate import quad, solve_ivp
from scipy.optimize import bisect, root_scalar

from eresonance import settings
from core.exceptions import DomainError, NoBounceError, NumericError
from core.models import PhysicalSetup
from core.services import field_for_alpha
from hjsolver.services import connection_constant, transverse_integral
from .models import ActionBreakdown, BounceResult, NearResonanceRatio, ResonanceCoefficient

logger = logging.getLogger('eresonance.bounce')


def _check_positive(value: float, name: str):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise DomainError(f"must be a finite positive number, got {value!r}", field=name)


def integral_ratio(alpha: float) -> float:
    """I(alpha) = J(alpha) / sqrt(alpha (2 + alpha))"""
    _check_positive(alpha, 'alpha')
    return transverse_integral(alpha) / math.sqrt(alpha * (2.0 + alpha))


def hard_wall_action(alpha: float, nu: float) -> ActionBreakdown:
    _check_positive(alpha, 'alpha')
    _check_positive(nu, 'nu')
    a_wkb = 4.0 * nu * math.sqrt(alpha * (2.0 + alpha))
    transverse = 4.0 * nu * transverse_integral(alpha)
    # 2 nu C(alpha) equals a_wkb - transverse without the cancellation near alpha_R
    total = 2.0 * nu * connection_constant(alpha)
    return ActionBreakdown(a_wkb=a_wkb, transverse=transverse, total=total, alpha=alpha, nu=nu)


def action_along_field(alpha: float, kappa: float) -> ActionBreakdown:
    """Action at fixed kappa = alpha nu, i.e. fixed |E| and a with H varying"""
    _check_positive(kappa, 'kappa')
    _check_positive(alpha, 'alpha')
    return hard_wall_action(alpha, kappa / alpha)


@lru_cache(maxsize=8)
def resonance_roots(tolerance: float = 1e-13) -> Tuple[float, float]:
    """Roots of I(alpha) = 1 (Brent) and C(alpha) = 0 (bisection)"""
    _check_positive(tolerance, 'tolerance')
    from_ratio = root_scalar(lambda a: integral_ratio(a) - 1.0, bracket=(1.0, 2.0),
                             method='brentq', xtol=tolerance, rtol=4 * np.finfo(float).eps)
    if not from_ratio.converged:
        raise NumericError(f"resonance root did not converge: {from_ratio.flag}")
    from_constant = bisect(connection_constant, 1.0, 2.0, xtol=tolerance, maxiter=200)
    return from_ratio.root, from_constant


def find_alpha_R(tolerance: float = 1e-13) -> float:
    root, other = resonance_roots(tolerance)
    logger.debug(f"alpha_R = {root:.15g} (connection constant root {other:.15g})")
    return root


@lru_cache(maxsize=1)
def _ratio_derivative():
    a = sympy.Symbol('alpha', positive=True)
    g = sympy.sqrt(a * (2 + a))
    ratio = ((a + 1) * g - sympy.acosh(a + 1)) / (2 * g)
    return a, sympy.diff(ratio, a)


@lru_cache(maxsize=8)
def resonance_coefficient(tolerance: float = 1e-13) -> ResonanceCoefficient:
    """c = alpha_R I'(alpha_R), symbolic, closed form and finite difference"""
    alpha_R = find_alpha_R(tolerance)
    a, derivative = _ratio_derivative()
    symbolic = alpha_R * float(derivative.subs(a, alpha_R).evalf(30))
    h = 1e-5
    fd = alpha_R * (integral_ratio(alpha_R + h) - integral_ratio(alpha_R - h)) / (2 * h)
    return ResonanceCoefficient(
        alpha_R=alpha_R,
        value=symbolic,
        closed_form=alpha_R - (alpha_R + 1.0) / (alpha_R + 2.0),
        finite_difference=fd,
    )


def resonance_field(setup: PhysicalSetup, tolerance: float = 1e-13) -> float:
    """H_R = c sqrt(2 m |E|) alpha_R / (|e| a)"""
    setup.with_field(0.0).clean()
    return field_for_alpha(setup, find_alpha_R(tolerance))


def near_resonance_ratio(alpha: float, nu: float, periods: int,
                         threshold: Optional[float] = None) -> NearResonanceRatio:
    """|psi(R Delta x, 0)/psi(0, 0)|^2, exactly and to first order in the detuning"""
    if int(periods) != periods or periods < 1:
        raise DomainError(f"must be a positive integer, got {periods!r}", field='R')
    threshold = settings.ER_MUCH_LESS_RATIO if threshold is None else threshold
    breakdown = hard_wall_action(alpha, nu)
    coefficient = resonance_coefficient()
    detuning = (coefficient.alpha_R - alpha) / coefficient.alpha_R

    flags = []
    if detuning <= 0:
        flags.append('detuning_nonpositive')
    else:
        if 1.0 / (breakdown.a_wkb * detuning) > threshold:
            flags.append('detuning_below_semiclassical_width')
        if detuning > threshold:
            flags.append('detuning_not_small')
    for flag in flags:
        logger.warning(f"Near-resonance window violated at alpha={alpha:.6g}, nu={nu:.6g}: {flag}")

    return NearResonanceRatio(
        alpha=alpha,
        nu=nu,
        periods=int(periods),
        detuning=detuning,
        exact=math.exp(-periods * breakdown.total),
        linearized=math.exp(-coefficient.value * detuning * periods * breakdown.a_wkb),
        flags=flags,
    )


def turning_point(alpha: float, wall_energy_ratio: float, N: int) -> float:
    """Positive root of eta (eta + 2) = w (eta/alpha)^(4N)

    Solved on the log form, which is strictly decreasing in eta for N >= 1.
    """
    log_w = math.log(wall_energy_ratio)

    def h(eta):
        return math.log(eta * (eta + 2.0)) - log_w - 4 * N * math.log(eta / alpha)

    lo = hi = alpha
    while h(lo) <= 0:
        lo *= 0.5
    while h(hi) >= 0:
        hi *= 2.0
    result = root_scalar(h, bracket=(lo, hi), method='brentq', xtol=1e-15 * alpha,
                         rtol=4 * np.finfo(float).eps)
    if not result.converged:
        raise NumericError(f"turning point did not converge: {result.flag}")
    return result.root


def _check_wall(alpha, nu, wall_energy_ratio, N):
    _check_positive(alpha, 'alpha')
    _check_positive(nu, 'nu')
    _check_positive(wall_energy_ratio, 'u0')
    if int(N) != N or N < 1:
        raise DomainError(f"must be a positive integer, got {N!r}", field='N')


def _reduced_speed(eta_max: float, N: int):
    """g = f / (eta (eta_max - eta)), regular on [0, eta_max]

    Uses eta_max + 2 = w eta_max^(4N-1)/alpha^(4N), so g = K S(r) - 1 with
    r = eta/eta_max, K = (eta_max + 2)/eta_max and S the geometric sum of r^i, i < 4N - 1.
    """
    K = (eta_max + 2.0) / eta_max
    powers = np.arange(4 * N - 1)

    def g(eta):
        r = eta / eta_max
        return K * np.sum(r ** powers) - 1.0

    return g


def bounce_action(alpha: float, nu: float, wall_energy_ratio: float, N: int,
                  max_turning_ratio: Optional[float] = None) -> Tuple[float, float, float]:
    """(transverse action, period, turning point) by energy-conservation quadrature"""
    _check_wall(alpha, nu, wall_energy_ratio, N)
    max_turning_ratio = settings.ER_MAX_TURNING_RATIO if max_turning_ratio is None else max_turning_ratio

    eta_max = turning_point(alpha, wall_energy_ratio, int(N))
    if eta_max > max_turning_ratio * alpha:
        raise NoBounceError(
            f"wall u0/|E|={wall_energy_ratio:.6g}, N={N} does not reflect near the wall: "
            f"turning point {eta_max:.6g} exceeds {max_turning_ratio:g} alpha"
        )
    g = _reduced_speed(eta_max, int(N))

    # eta = eta_max sin^2(theta) removes both square-root endpoints
    def action_integrand(theta):
        s, c = math.sin(theta), math.cos(theta)
        return 2.0 * eta_max ** 2 * s * s * c * c * math.sqrt(g(eta_max * s * s))

    def time_integrand(theta):
        s = math.sin(theta)
        return 2.0 / math.sqrt(g(eta_max * s * s))

    half_action, err_a = quad(action_integrand, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=1e-12, limit=400)
    half_time, err_t = quad(time_integrand, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=1e-12, limit=400)
    logger.debug(f"Bounce quadrature errors: action {err_a:.2e}, time {err_t:.2e}")
    return 4.0 * nu * half_action, 2.0 * half_time, eta_max


def integrate_bounce(alpha: float, nu: float, wall_energy_ratio: float, N: int,
                     rtol: float = 1e-12, atol: float = 1e-14, samples: int = 201,
                     max_turning_ratio: Optional[float] = None) -> BounceResult:
    """Bounce trajectory and transverse action, by quadrature and by time stepping"""
    transverse, period, eta_max = bounce_action(alpha, nu, wall_energy_ratio, N, max_turning_ratio)
    exponent = 4 * int(N)

    def rhs(t, state):
        eta, v, _ = state
        ratio = abs(eta) / alpha
        force = eta + 1.0 - 0.5 * wall_energy_ratio * exponent / alpha * ratio ** (exponent - 1)
        return [v, force, v * v]

    def stop(t, state):
        return state[1]
    stop.terminal = True
    stop.direction = -1

    sol = solve_ivp(rhs, (0.0, 4.0 * period), [0.0, 0.0, 0.0], method='DOP853',
                    events=stop, dense_output=True, rtol=rtol, atol=atol)
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise NumericError(f"bounce integration did not reach the turning point: {sol.message}",
                           history=list(sol.y[1]))
    half = sol.t_events[0][0]
    transverse_ivp = 4.0 * nu * sol.y_events[0][0][2]

    tau_half = np.linspace(0.0, half, samples)
    eta_half, v_half, _ = sol.sol(tau_half)
    tau = np.concatenate([tau_half, 2.0 * half - tau_half[-2::-1]])
    eta = np.concatenate([eta_half, eta_half[-2::-1]])
    velocity = np.concatenate([v_half, -v_half[-2::-1]])

    logger.info(
        f"Bounce at alpha={alpha:.6g}, u0/|E|={wall_energy_ratio:.6g}, N={N}: "
        f"turning point {eta_max:.8g}, transverse action {transverse:.10g} "
        f"(time stepping {transverse_ivp:.10g})"
    )
    return BounceResult(
        tau=tau,
        eta=eta,
        velocity=velocity,
        period=2.0 * half,
        turning_point=eta_max,
        transverse_action=transverse,
        transverse_action_ivp=transverse_ivp,
        a_wkb=4.0 * nu * math.sqrt(alpha * (2.0 + alpha)),
        alpha=alpha,
        nu=nu,
        wall_energy_ratio=float(wall_energy_ratio),
        wall_exponent=int(N),
    )
