# bounce/models.py
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np


@dataclass(frozen=True)
class ActionBreakdown:
    """Decay exponent per period, A = A_WKB - transverse"""

    a_wkb: float
    transverse: float
    total: float
    alpha: float
    nu: float

    @property
    def suppression(self) -> float:
        return math.exp(-self.total)

    @property
    def relative(self) -> float:
        """A / A_WKB, a function of alpha only"""
        return self.total / self.a_wkb


@dataclass(frozen=True)
class ResonanceCoefficient:
    alpha_R: float
    value: float            # alpha_R I'(alpha_R) from the symbolic derivative
    closed_form: float      # alpha_R - (alpha_R + 1)/(alpha_R + 2)
    finite_difference: float


@dataclass(frozen=True)
class NearResonanceRatio:
    alpha: float
    nu: float
    periods: int
    detuning: float         # (alpha_R - alpha)/alpha_R = (H_R - H)/H_R
    exact: float            # exp(-R A(alpha))
    linearized: float       # exp(-c detuning A_WKB(R Delta x))
    flags: List[str] = field(default_factory=list)

    @property
    def in_window(self) -> bool:
        return not self.flags


@dataclass
class BounceResult:
    """Imaginary-time trajectory; tau in 1/omega_c, eta in L"""

    tau: np.ndarray
    eta: np.ndarray
    velocity: np.ndarray
    period: float
    turning_point: float
    transverse_action: float
    transverse_action_ivp: float
    a_wkb: float
    alpha: float
    nu: float
    wall_energy_ratio: float
    wall_exponent: int

    @property
    def total_action(self) -> float:
        return self.a_wkb - self.transverse_action

    def speed_squared(self, eta):
        """Right side f(eta) of the conservation law eta'^2 = f(eta)"""
        eta = np.asarray(eta, dtype=float)
        ratio = np.abs(eta) / self.alpha
        return eta * (eta + 2.0) - self.wall_energy_ratio * ratio ** (4 * self.wall_exponent)

    @property
    def energy_residual(self) -> float:
        """Largest |eta'^2 - f(eta)| over the samples, relative to f's scale"""
        scale = self.turning_point * (self.turning_point + 2.0)
        return float(np.max(np.abs(self.velocity ** 2 - self.speed_squared(self.eta))) / scale)
