# hjsolver/models.py
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

# Points within this relative margin of a region boundary count as outside
BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class ComplexAction:
    """Dimensionless action sigma and its gradient at one point"""

    sigma: complex
    grad: Tuple[complex, complex]
    region_index: int
    on_valid_region: bool = True
    y: float = 0.0

    @property
    def residual(self) -> float:
        """|(sigma_x + iy)^2 + sigma_y^2 - 1|"""
        sx, sy = self.grad
        return abs((sx + 1j * self.y) ** 2 + sy ** 2 - 1.0)


@dataclass(frozen=True)
class RegionGeometry:
    alpha: float

    @property
    def period(self) -> float:
        return 2.0 * math.sqrt(self.alpha * (2.0 + self.alpha))

    def cell_index(self, x) -> np.ndarray:
        """Index k of the cell ((k - 1/2) Delta x, (k + 1/2) Delta x) centred on region k"""
        return np.floor(np.asarray(x, dtype=float) / self.period + 0.5).astype(int)

    def cores(self, count: int, start: int = 0) -> np.ndarray:
        """Vortex core positions (k + 1/2) Delta x on y = 0 for k = start .. start + count - 1"""
        return (np.arange(start, start + count) + 0.5) * self.period

    def lhs(self, x, y, k: int):
        """Left side of the region-k membership inequality"""
        u = np.asarray(x, dtype=float) - k * self.period
        # sqrt(1 + u^2) - 1 without cancellation
        lift = u * u / (np.sqrt(1.0 + u * u) + 1.0)
        return lift ** 2 + np.asarray(y, dtype=float) ** 2

    def contains(self, x, y, k: int):
        """Strict membership; boundary points, the cores included, are outside"""
        return self.lhs(x, y, k) < self.alpha ** 2 * (1.0 - BOUNDARY_RTOL)
