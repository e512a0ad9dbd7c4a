"""Multiplier-based stability classes for periodic points of planar area-preserving maps."""

from __future__ import annotations

import math
from enum import Enum

PARABOLIC_BAND = 1e-6
RESONANCE_BAND = 1e-6

# Strong resonances are detected through the trace, which is 2cos(psi).
FIXED_POINT_RESONANCES = (math.pi / 2, 2 * math.pi / 3)
TWO_CYCLE_RESONANCES = (math.pi / 2, 2 * math.pi / 3, math.acos(-0.25))


class Stability(str, Enum):
    ELLIPTIC_GENERIC = "EllipticGeneric"
    ELLIPTIC_RESONANT = "EllipticResonant"
    PARABOLIC_PLUS = "ParabolicPlus"
    PARABOLIC_MINUS = "ParabolicMinus"
    SADDLE = "Saddle"
    SADDLE_REFLECTION = "SaddleReflection"

    @property
    def is_elliptic(self) -> bool:
        return self in (Stability.ELLIPTIC_GENERIC, Stability.ELLIPTIC_RESONANT)


def classify_multipliers(
    trace: float,
    det: float,
    resonances: tuple[float, ...] = FIXED_POINT_RESONANCES,
    band: float = PARABOLIC_BAND,
) -> tuple[Stability, float | None]:
    """Classify a 2x2 area-preserving differential from its trace and determinant.

    Returns the stability class and the rotation angle psi (None unless elliptic).
    An orientation-reversing differential (det close to -1) always has real
    multipliers of opposite sign and is reported as ``SaddleReflection``.
    """
    if det < 0:
        return Stability.SADDLE_REFLECTION, None
    if abs(trace - 2.0) < band:
        return Stability.PARABOLIC_PLUS, None
    if abs(trace + 2.0) < band:
        return Stability.PARABOLIC_MINUS, None
    if abs(trace) > 2.0:
        return Stability.SADDLE, None
    psi = math.acos(trace / 2.0)
    for target in resonances:
        if abs(trace - 2.0 * math.cos(target)) < RESONANCE_BAND:
            return Stability.ELLIPTIC_RESONANT, psi
    return Stability.ELLIPTIC_GENERIC, psi
