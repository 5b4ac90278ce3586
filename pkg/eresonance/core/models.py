# core/models.py
import math
from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import constants as sc

from .exceptions import DomainError


@dataclass(frozen=True)
class UnitSystem:
    """Values of the fundamental constants in one unit system"""

    name: str
    hbar: float
    c: float

    @classmethod
    def natural(cls) -> 'UnitSystem':
        return cls('natural', 1.0, 1.0)

    @classmethod
    def cgs(cls) -> 'UnitSystem':
        # Gaussian units: erg*s, cm/s
        return cls('cgs', sc.hbar * 1e7, sc.c * 1e2)

    @classmethod
    def atomic(cls) -> 'UnitSystem':
        # Gaussian atomic units: hbar = m_e = e = 1, c = 1/fine-structure
        cgs = cls.cgs()
        return cls('atomic', 1.0, cgs.c * cgs.hbar / CGS_ELECTRON_CHARGE ** 2)

    @classmethod
    def named(cls, name: str) -> 'UnitSystem':
        presets = {'natural': cls.natural, 'cgs': cls.cgs, 'atomic': cls.atomic}
        if name not in presets:
            raise DomainError(f"unknown unit system '{name}'", field='units')
        return presets[name]()


# Electron charge (statC) and mass (g) in Gaussian units
CGS_ELECTRON_CHARGE = sc.e * sc.c * 10.0
CGS_ELECTRON_MASS = sc.m_e * 1e3


@dataclass(frozen=True)
class PhysicalSetup:
    """Dimensional inputs of the tunneling problem"""

    energy: float           # |E|
    mass: float
    charge: float           # |e|
    a: float                # wall half-width
    H: float                # magnetic field
    u0: float               # wall strength
    N: int                  # wall exponent, u(y) = u0 (y/a)^(4N)
    hbar: float = 1.0
    c: float = 1.0

    POSITIVE_FIELDS = ('energy', 'mass', 'charge', 'a', 'u0', 'hbar', 'c')

    def clean(self):
        """Raise DomainError naming the first field outside its domain"""
        for name in self.POSITIVE_FIELDS:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"must be a finite positive number, got {value!r}", field=name)
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"must be a positive integer, got {self.N!r}", field='N')
        if not math.isfinite(self.H) or self.H < 0:
            raise DomainError(f"must be finite and >= 0, got {self.H!r}", field='H')

    def with_field(self, H: float) -> 'PhysicalSetup':
        return PhysicalSetup(self.energy, self.mass, self.charge, self.a, H,
                             self.u0, self.N, self.hbar, self.c)

    @property
    def cyclotron_frequency(self) -> float:
        return self.charge * self.H / (self.mass * self.c)

    @property
    def flux_quantum(self) -> float:
        # superconducting-type convention, pi*c*hbar/e
        return math.pi * self.c * self.hbar / self.charge


class ConditionCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    description: str
    ratio: Optional[float]
    threshold: float
    margin: Optional[float]
    status: Literal['pass', 'warn']


class ValidityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    checks: List[ConditionCheck]

    @property
    def ok(self) -> bool:
        return all(check.status == 'pass' for check in self.checks)

    def get(self, name: str) -> ConditionCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def warnings(self) -> List[ConditionCheck]:
        return [check for check in self.checks if check.status == 'warn']


@dataclass(frozen=True)
class Dimensionless:
    """Derived parameters; lengths are in units of the cyclotron length L"""

    alpha: float
    nu: float
    flux_count: float
    cyclotron_length: float     # L, physical
    magnetic_length: float      # l, physical
    period: float               # Delta x / L
    core_scale: float           # delta / L = 1/(alpha nu)
    wall_energy_ratio: float    # u0/|E|
    wall_exponent: int
    validity: Optional[ValidityReport] = None

    @property
    def core_scale_physical(self) -> float:
        return self.core_scale * self.cyclotron_length


@dataclass(frozen=True)
class GridSpec:
    """Rectangular node set over x in [0, x_max), |y| < y_max (units of L)

    x nodes: i*hx, i = 0..nx-1, hx = x_max/nx (x = x_max is a Dirichlet end).
    y nodes: -y_max + j*hy, j = 1..ny-1, hy = 2*y_max/ny; ny even so y = 0 is a node.
    """

    nx: int
    ny: int
    x_max: float
    y_max: float

    def clean(self):
        if self.nx < 5:
            raise DomainError(f"need at least 5 x nodes, got {self.nx}", field='nx')
        if self.ny < 6 or self.ny % 2:
            raise DomainError(f"need an even count of at least 6 y intervals, got {self.ny}", field='ny')
        if not self.x_max > 0:
            raise DomainError(f"must be positive, got {self.x_max}", field='x_max')
        if not self.y_max > 0:
            raise DomainError(f"must be positive, got {self.y_max}", field='y_max')

    @property
    def hx(self) -> float:
        return self.x_max / self.nx

    @property
    def hy(self) -> float:
        return 2.0 * self.y_max / self.ny

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny - 1)

    @property
    def center_row(self) -> int:
        """Index of the y = 0 row"""
        return self.ny // 2 - 1

    def x_nodes(self) -> np.ndarray:
        return np.arange(self.nx) * self.hx

    def y_nodes(self) -> np.ndarray:
        y = -self.y_max + np.arange(1, self.ny) * self.hy
        y[self.center_row] = 0.0
        return y

    def mesh(self):
        return np.meshgrid(self.x_nodes(), self.y_nodes(), indexing='ij')
