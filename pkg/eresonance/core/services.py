# core/services.py
import math
import logging
from typing import Optional

from eresonance import settings
from .exceptions import DomainError, FlatFieldError
from .models import ConditionCheck, Dimensionless, PhysicalSetup, ValidityReport

logger = logging.getLogger('eresonance.core')


def _ratio_check(name: str, description: str, ratio: Optional[float],
                 threshold: float) -> ConditionCheck:
    """A "ratio << 1" condition; an undefined ratio always warns"""
    if ratio is None or not math.isfinite(ratio) or ratio <= 0:
        return ConditionCheck(name=name, description=description, ratio=None,
                              threshold=threshold, margin=None, status='warn')
    return ConditionCheck(
        name=name,
        description=description,
        ratio=ratio,
        threshold=threshold,
        margin=1.0 / ratio,
        status='pass' if ratio <= threshold else 'warn',
    )


def _report(kinetic: Optional[float], length: Optional[float], wall: Optional[float],
            field_positive: bool, threshold: Optional[float] = None) -> ValidityReport:
    threshold = settings.ER_MUCH_LESS_RATIO if threshold is None else threshold
    checks = [
        _ratio_check('kinetic', 'hbar^2/(m a^2) << |E|', kinetic, threshold),
        _ratio_check('magnetic_length', 'l << a', length, threshold),
        _ratio_check('wall_exponent', 'N << n', wall, threshold),
        ConditionCheck(
            name='field_positive',
            description='H > 0',
            ratio=None,
            threshold=0.0,
            margin=None,
            status='pass' if field_positive else 'warn',
        ),
    ]
    return ValidityReport(checks=checks)


def _safe_div(num: float, den: float) -> Optional[float]:
    try:
        value = num / den
    except (ZeroDivisionError, TypeError):
        return None
    return value if math.isfinite(value) else None


def validate(setup: PhysicalSetup, threshold: Optional[float] = None) -> ValidityReport:
    """Report the semiclassical conditions without raising"""
    positive = all(
        isinstance(getattr(setup, name), (int, float)) and getattr(setup, name) > 0
        for name in PhysicalSetup.POSITIVE_FIELDS
    )
    kinetic = length = wall = None
    if positive:
        kinetic = _safe_div(setup.hbar ** 2, setup.mass * setup.a ** 2 * setup.energy)
        if setup.H > 0:
            omega_c = setup.cyclotron_frequency
            l = math.sqrt(setup.hbar / (setup.mass * omega_c))
            length = l / setup.a
            wall = _safe_div(setup.N, setup.H * setup.a ** 2 / setup.flux_quantum)
    return _report(kinetic, length, wall, bool(setup.H > 0), threshold)


def validate_reduced(alpha: float, nu: float, N: int,
                     threshold: Optional[float] = None) -> ValidityReport:
    """Same report computed from alpha and nu alone"""
    if not (alpha > 0 and nu > 0):
        return _report(None, None, None, False, threshold)
    return _report(
        2.0 / (alpha ** 2 * nu ** 2),
        1.0 / (alpha * math.sqrt(nu)),
        N * math.pi / (alpha ** 2 * nu),
        True,
        threshold,
    )


def _log_warnings(report: ValidityReport):
    for check in report.warnings:
        logger.warning(
            f"Validity condition {check.description} not satisfied "
            f"(ratio {check.ratio}, threshold {check.threshold})"
        )


def derive_dimensionless(setup: PhysicalSetup) -> Dimensionless:
    """Reduce a physical setup to alpha, nu and the derived lengths"""
    setup.clean()
    if setup.H == 0:
        raise FlatFieldError()

    omega_c = setup.cyclotron_frequency
    L = math.sqrt(2.0 * setup.energy / setup.mass) / omega_c
    l = math.sqrt(setup.hbar / (setup.mass * omega_c))
    alpha = setup.a / L
    nu = 2.0 * setup.energy / (setup.hbar * omega_c)

    report = validate(setup)
    _log_warnings(report)
    logger.debug(f"Derived alpha={alpha:.6g}, nu={nu:.6g} from H={setup.H:.6g}")

    return Dimensionless(
        alpha=alpha,
        nu=nu,
        flux_count=setup.H * setup.a ** 2 / setup.flux_quantum,
        cyclotron_length=L,
        magnetic_length=l,
        period=2.0 * math.sqrt(alpha * (2.0 + alpha)),
        core_scale=1.0 / (alpha * nu),
        wall_energy_ratio=setup.u0 / setup.energy,
        wall_exponent=int(setup.N),
        validity=report,
    )


def reduced(alpha: float, nu: float, wall_energy_ratio: float = None,
            wall_exponent: int = None) -> Dimensionless:
    """Dimensionless parameters given directly; physical lengths are in units of L"""
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"must be a finite positive number, got {alpha!r}", field='alpha')
    if not (math.isfinite(nu) and nu > 0):
        raise DomainError(f"must be a finite positive number, got {nu!r}", field='nu')
    wall_energy_ratio = settings.ER_DEFAULT_U0 if wall_energy_ratio is None else wall_energy_ratio
    wall_exponent = settings.ER_DEFAULT_N if wall_exponent is None else wall_exponent
    if not wall_energy_ratio > 0:
        raise DomainError(f"must be positive, got {wall_energy_ratio!r}", field='u0')
    if int(wall_exponent) != wall_exponent or wall_exponent < 1:
        raise DomainError(f"must be a positive integer, got {wall_exponent!r}", field='N')

    report = validate_reduced(alpha, nu, wall_exponent)
    _log_warnings(report)
    return Dimensionless(
        alpha=alpha,
        nu=nu,
        flux_count=alpha ** 2 * nu / math.pi,
        cyclotron_length=1.0,
        magnetic_length=1.0 / math.sqrt(nu),
        period=2.0 * math.sqrt(alpha * (2.0 + alpha)),
        core_scale=1.0 / (alpha * nu),
        wall_energy_ratio=float(wall_energy_ratio),
        wall_exponent=int(wall_exponent),
        validity=report,
    )


def restore_setup(dimensionless: Dimensionless, energy: float, mass: float,
                  charge: float, hbar: float = 1.0, c: float = 1.0) -> PhysicalSetup:
    """Invert derive_dimensionless for the given energy and constants"""
    for name, value in (('energy', energy), ('mass', mass), ('charge', charge),
                        ('hbar', hbar), ('c', c)):
        if not value > 0:
            raise DomainError(f"must be positive, got {value!r}", field=name)
    omega_c = 2.0 * energy / (hbar * dimensionless.nu)
    L = math.sqrt(2.0 * energy / mass) / omega_c
    return PhysicalSetup(
        energy=energy,
        mass=mass,
        charge=charge,
        a=dimensionless.alpha * L,
        H=mass * c * omega_c / charge,
        u0=dimensionless.wall_energy_ratio * energy,
        N=dimensionless.wall_exponent,
        hbar=hbar,
        c=c,
    )


def field_for_alpha(setup: PhysicalSetup, alpha: float) -> float:
    """Field H at which a/L equals alpha, at fixed |E| and a"""
    if not alpha > 0:
        raise DomainError(f"must be positive, got {alpha!r}", field='alpha')
    setup.with_field(0.0).clean()
    return setup.c * math.sqrt(2.0 * setup.mass * setup.energy) * alpha / (setup.charge * setup.a)
