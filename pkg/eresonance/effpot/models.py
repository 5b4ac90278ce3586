# effpot/models.py
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

# Provenance tags
TRANSVERSE = 'extracted-transverse'      # from y-curvature and chi_y at y = 0
LONGITUDINAL = 'extracted-longitudinal'  # from x-curvature of |psi(x, 0)| plus E
HIGH_FIELD = 'analytic-high-field'
SEMICLASSICAL = 'parabolic'
PIECEWISE = 'piecewise'


@dataclass
class EffectivePotentialProfile:
    """Samples of U(x) in units of |E|; NaN marks masked (singular) samples"""

    x: np.ndarray
    U: np.ndarray
    variant: str
    kinetic: float = 1.0
    singular_points: List[float] = field(default_factory=list)
    shift: Optional[float] = None

    @property
    def masked(self) -> np.ndarray:
        return ~np.isfinite(self.U)

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    def rows(self):
        """(x, U, variant, masked) with U None when masked"""
        for x, U, masked in zip(self.x, self.U, self.masked):
            yield float(x), None if masked else float(U), self.variant, int(masked)


@dataclass(frozen=True)
class PotentialExtraction:
    transverse: EffectivePotentialProfile
    longitudinal: EffectivePotentialProfile
    energy: float


@dataclass(frozen=True)
class DepthSweep:
    depths: np.ndarray
    counts: np.ndarray
    crossings: List[float]
    target: float
