# oracle/models.py
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel

from core.models import GridSpec


@dataclass
class DiscreteProblem:
    """Symmetrized finite-difference operator on [0, X] x [-Y, Y] (units of L)

    Unknowns are psi~ = sqrt(m_i hy) psi with x mass weights m_0 = hx/2 and
    m_i = hx, ordered i*(ny - 1) + j with y fastest.
    """

    grid: GridSpec
    nu: float
    alpha: float
    wall_energy_ratio: float
    wall_exponent: int
    operator: sp.csr_matrix
    target_energy: float = -1.0
    magnetic: bool = True
    gauge_shift: float = 0.0
    one_dimensional: bool = False

    @property
    def robin_coefficient(self) -> float:
        return self.nu * float(np.sqrt(-self.target_energy))

    @property
    def size(self) -> int:
        return self.operator.shape[0]

    @property
    def shape(self) -> tuple:
        return (self.grid.nx,) if self.one_dimensional else self.grid.shape

    def mass_weights(self) -> np.ndarray:
        """m_i hy per unknown (m_i alone for the 1D control)"""
        mx = np.full(self.grid.nx, self.grid.hx)
        mx[0] = 0.5 * self.grid.hx
        if self.one_dimensional:
            return mx
        return np.repeat(mx, self.grid.ny - 1) * self.grid.hy

    def describe(self) -> dict:
        return {
            'nx': self.grid.nx,
            'ny': self.grid.ny,
            'x_max': self.grid.x_max,
            'y_max': self.grid.y_max,
            'hx': self.grid.hx,
            'hy': self.grid.hy,
            'nu': self.nu,
            'alpha': self.alpha,
            'wall_energy_ratio': self.wall_energy_ratio,
            'wall_exponent': self.wall_exponent,
            'target_energy': self.target_energy,
            'robin_coefficient': self.robin_coefficient,
            'magnetic': self.magnetic,
            'gauge_shift': self.gauge_shift,
            'boundary': 'robin at x=0, dirichlet at x=X and y=+-Y',
        }


@dataclass
class EigenSolution:
    """Ground eigenpair; psi is in physical normalization, sum m_i hy |psi|^2 = 1"""

    problem: DiscreteProblem
    eigenvalue: float
    psi: np.ndarray
    residual: float
    iterations: int
    history: List[float] = field(default_factory=list)
    imaginary_part: float = 0.0

    @property
    def deviation(self) -> float:
        """|E~_1 + 1|"""
        return abs(self.eigenvalue + 1.0)

    def grid_field(self):
        from field.models import GridField
        from field.services import regions_for

        grid = self.problem.grid
        return GridField(
            grid=grid,
            psi=self.psi,
            region=regions_for(grid, self.problem.alpha),
            valid=np.ones(grid.shape, dtype=bool),
            alpha=self.problem.alpha,
            nu=self.problem.nu,
            source='oracle',
            gauge_shift=self.problem.gauge_shift,
        )


class Comparison(BaseModel):
    name: str
    measured: Optional[float]
    predicted: Optional[float]
    tolerance: str
    passed: bool
    detail: str = ''
    # holds only when l << a and hbar^2/(m a^2) << |E|
    needs_semiclassical: bool = False


class SemiclassicalReport(BaseModel):
    alpha: float
    nu: float
    eigenvalue: float
    comparisons: List[Comparison]
    semiclassical: bool = True
    regime: str = ''

    def gates(self, item: Comparison) -> bool:
        return self.semiclassical or not item.needs_semiclassical

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.comparisons if self.gates(item))

    @property
    def deferred(self) -> List[str]:
        """Comparisons reported but not judged outside the semiclassical regime"""
        return [item.name for item in self.comparisons if not self.gates(item)]

    def get(self, name: str) -> Comparison:
        for item in self.comparisons:
            if item.name == name:
                return item
        raise KeyError(name)


class ScanRow(BaseModel):
    alpha: float
    nu: float
    nx: int
    ny: int
    eigenvalue: Optional[float]
    measured: Optional[float]
    predicted: float
    log_ratio: Optional[float]
    status: str = 'ok'
    error: str = ''
