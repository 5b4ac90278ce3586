# core/exceptions.py
from typing import List, Optional


class EngineError(Exception):
    """Base class for every failure raised by the engine"""


class DomainError(EngineError, ValueError):
    """Input outside the domain of an operation"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class FlatFieldError(DomainError):
    """H = 0: the cyclotron length diverges and the reduction is undefined"""

    def __init__(self):
        super().__init__(
            "magnetic field is zero; the cyclotron length diverges and the "
            "dimensionless reduction is undefined",
            field='H',
        )


class RegionError(DomainError):
    """Point lies outside every reflectionless region"""


class ResolutionError(DomainError):
    """Grid spacing too coarse for a physical scale"""

    def __init__(self, scale: str, spacing: float, required: float, axis: str):
        self.scale = scale
        self.spacing = spacing
        self.required = required
        self.axis = axis
        super().__init__(
            f"grid under-resolves the {scale}: h{axis} = {spacing:.4g} > {required:.4g}",
            field=f"h{axis}",
        )


class CoverageError(DomainError):
    """Loop passes through masked (non-semiclassical) nodes"""


class ConfigError(DomainError):
    """Unknown or malformed configuration entry"""


class NoBounceError(EngineError):
    """Transverse wall does not reflect the imaginary-time trajectory"""


class NumericError(EngineError):
    """Iterative procedure failed to converge"""

    def __init__(self, message: str, history: Optional[List[float]] = None):
        self.history = list(history or [])
        super().__init__(message)
