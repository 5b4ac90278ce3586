# field/models.py
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from core.models import GridSpec

# A = (-H (y - y0), 0, 0)
LANDAU_GAUGE = 'landau-x'


@dataclass
class GridField:
    """Complex amplitudes on a GridSpec, lengths in L

    `region` holds the region index of every node (-1 outside all regions);
    `valid` marks nodes carrying a trusted amplitude. Semiclassical fields are
    valid only inside regions, oracle fields everywhere.
    """

    grid: GridSpec
    psi: np.ndarray
    region: np.ndarray
    valid: np.ndarray
    alpha: float
    nu: float
    source: str = 'semiclassical'
    gauge: str = LANDAU_GAUGE
    gauge_shift: float = 0.0
    chi: Optional[np.ndarray] = None
    chi_gradient: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        if self.psi.shape != self.grid.shape:
            raise ValueError(f"amplitudes have shape {self.psi.shape}, grid is {self.grid.shape}")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x_nodes()

    @property
    def y(self) -> np.ndarray:
        return self.grid.y_nodes()

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.psi)

    @property
    def phase(self) -> np.ndarray:
        if self.chi is not None:
            return self.chi
        return np.angle(self.psi)

    @property
    def axis(self) -> np.ndarray:
        """psi(x, 0)"""
        return self.psi[:, self.grid.center_row]


@dataclass(frozen=True)
class LoopIntegral:
    """Circulation of Q, winding and enclosed flux; Q in H L, flux in H L^2"""

    circulation: float
    winding: int
    winding_raw: float
    enclosed_flux: float
    nu: float
    vertices: np.ndarray = field(repr=False)
    segments: int = 0

    @property
    def flux_quantum(self) -> float:
        """pi c hbar/e in units of H L^2"""
        return math.pi / self.nu

    @property
    def gauge_residual(self) -> float:
        """circulation - enclosed flux - 2 Phi0 w"""
        return self.circulation - self.enclosed_flux - 2.0 * self.flux_quantum * self.winding


@dataclass(frozen=True)
class VortexRecord:
    x: float
    y: float
    loop: LoopIntegral

    @property
    def winding(self) -> int:
        return self.loop.winding

    @property
    def circulation(self) -> float:
        return self.loop.circulation

    def describe_loop(self) -> dict:
        vertices = self.loop.vertices
        return {
            'kind': 'polygon',
            'vertices': [[float(a), float(b)] for a, b in vertices],
            'segments': self.loop.segments,
        }
