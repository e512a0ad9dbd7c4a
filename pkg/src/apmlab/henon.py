"""Closed-form analysis of the conservative Hénon maps that arise as rescaling limits.

Orientable map:      X' = Y,  Y' = M - X - Y^2 + cubic * Y^3
Non-orientable map:  X' = Y,  Y' = M + X - Y^2 + cubic * Y^3

With ``cubic = 0`` every quantity here is computed from explicit roots, so the
module serves as the ground-truth oracle for the return-map computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .stability import (
    FIXED_POINT_RESONANCES,
    TWO_CYCLE_RESONANCES,
    Stability,
    classify_multipliers,
)

TAG_TOL = 1e-12


@dataclass(frozen=True)
class HenonPoint:
    point: tuple[float, float]
    trace: float
    det: float
    stability: Stability
    psi: float | None


@dataclass(frozen=True)
class HenonCycle:
    points: tuple[tuple[float, float], tuple[float, float]]
    trace: float
    det: float
    stability: Stability
    psi: float | None


@dataclass
class HenonAnalysis:
    orientable: bool
    M: float
    cubic: float = 0.0
    fixed_points: list[HenonPoint] = field(default_factory=list)
    two_cycles: list[HenonCycle] = field(default_factory=list)
    bifurcation_values: list[tuple[float, str]] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)

    @property
    def elliptic_points(self) -> list[HenonPoint]:
        return [p for p in self.fixed_points if p.stability.is_elliptic]


ORIENTABLE_VALUES = (
    (-1.0, "parabolic +1 (fold of fixed points)"),
    (0.0, "resonance 1:4 (psi = pi/2)"),
    (1.25, "resonance 1:3 (psi = 2pi/3)"),
    (3.0, "parabolic -1 (period doubling)"),
)

NONORIENTABLE_VALUES = (
    (0.0, "multipliers +1, -1 (birth of fixed points and 2-cycle)"),
    (0.5, "2-cycle resonance 1:4 (psi = pi/2)"),
    (0.625, "2-cycle resonance psi = arccos(-1/4)"),
    (0.75, "2-cycle resonance 1:3 (psi = 2pi/3)"),
    (1.0, "2-cycle period doubling"),
)


def henon_step(X, Y, M: float, orientable: bool, cubic: float = 0.0):
    """One iterate of the (generalized) conservative Hénon map; works on arrays."""
    sign = -1.0 if orientable else 1.0
    return Y, M + sign * X - Y * Y + cubic * Y**3


def henon_jacobian(X: float, Y: float, orientable: bool, cubic: float = 0.0) -> np.ndarray:
    sign = -1.0 if orientable else 1.0
    return np.array([[0.0, 1.0], [sign, -2.0 * Y + 3.0 * cubic * Y * Y]])


def _fixed_point_abscissae(M: float, orientable: bool, cubic: float) -> list[float]:
    # Fixed points lie on the diagonal; x solves M + (sign - 1) x - x^2 + cubic x^3 = 0.
    if cubic == 0.0:
        if orientable:
            disc = 1.0 + M
            if disc < 0:
                return []
            r = math.sqrt(disc)
            return [-1.0 + r] if r == 0 else [-1.0 + r, -1.0 - r]
        if M < 0:
            return []
        r = math.sqrt(M)
        return [0.0] if r == 0 else [r, -r]
    lin = -2.0 if orientable else 0.0
    if abs(cubic) < 1e-8:
        # the third root sits near 1/cubic, far outside the Henon neighbourhood
        roots = np.array(_fixed_point_abscissae(M, orientable, 0.0), dtype=complex)
    else:
        roots = np.roots([cubic, -1.0, lin, M])
    out = []
    with np.errstate(over="ignore", invalid="ignore"):
        for z in roots:
            if abs(z.imag) >= 1e-12:
                continue
            x = np.float64(z.real)
            # polish with Newton, keeping only steps that reduce the residual (double roots at folds)
            g = M + lin * x - x * x + cubic * x**3
            for _ in range(8):
                dg = lin - 2.0 * x + 3.0 * cubic * x * x
                if not np.isfinite(g) or dg == 0.0:
                    break
                xn = x - g / dg
                gn = M + lin * xn - xn * xn + cubic * xn**3
                if not abs(gn) < abs(g):
                    break
                x, g = xn, gn
            if np.isfinite(x) and np.isfinite(cubic * x**3) and np.isfinite(3.0 * cubic * x * x):
                out.append(float(x))
    return sorted(out)


def _classify_point(x: float, y: float, orientable: bool, cubic: float) -> HenonPoint:
    J = henon_jacobian(x, y, orientable, cubic)
    tr = float(np.trace(J))
    det = float(np.linalg.det(J))
    stab, psi = classify_multipliers(tr, det, FIXED_POINT_RESONANCES)
    return HenonPoint((x, y), tr, det, stab, psi)


def _tags(M: float, table) -> list[str]:
    return [name for value, name in table if abs(M - value) < TAG_TOL]


def analyze_orientable(M: float, cubic: float = 0.0) -> HenonAnalysis:
    """Fixed points of the orientable map and their stability.

    On the elliptic branch x = -1 + sqrt(1+M) the rotation number is
    psi = arccos(1 - sqrt(1+M)); the branch is elliptic for -1 < M < 3.
    """
    out = HenonAnalysis(True, M, cubic, bifurcation_values=list(ORIENTABLE_VALUES))
    for x in _fixed_point_abscissae(M, True, cubic):
        out.fixed_points.append(_classify_point(x, x, True, cubic))
    out.tags = _tags(M, ORIENTABLE_VALUES)
    return out


def _two_cycle(M: float) -> tuple[tuple[float, float], tuple[float, float]] | None:
    if M <= 0:
        return None
    r = math.sqrt(M)
    return ((-r, r), (r, -r))


def analyze_nonorientable(M: float) -> HenonAnalysis:
    """Fixed points (saddles with reflection) and the symmetric 2-cycle.

    The 2-cycle {(-sqrt M, sqrt M), (sqrt M, -sqrt M)} has trace 2 - 4M and is
    elliptic for 0 < M < 1 with psi = arccos(1 - 2M).
    """
    out = HenonAnalysis(False, M, 0.0, bifurcation_values=list(NONORIENTABLE_VALUES))
    for x in _fixed_point_abscissae(M, False, 0.0):
        out.fixed_points.append(_classify_point(x, x, False, 0.0))
    cyc = _two_cycle(M)
    if cyc is not None:
        J = henon_jacobian(*cyc[1], False) @ henon_jacobian(*cyc[0], False)
        tr = float(np.trace(J))
        det = float(np.linalg.det(J))
        stab, psi = classify_multipliers(tr, det, TWO_CYCLE_RESONANCES)
        out.two_cycles.append(HenonCycle(cyc, tr, det, stab, psi))
    out.tags = _tags(M, NONORIENTABLE_VALUES)
    return out


def resonance_M_values(orientable: bool) -> list[float]:
    """Parameter values of the strong resonances on the elliptic orbit."""
    return [0.0, 1.25] if orientable else [0.5, 0.625, 0.75]


def psi_orientable(M: float) -> float:
    return math.acos(1.0 - math.sqrt(1.0 + M))


def psi_nonorientable(M: float) -> float:
    return math.acos(1.0 - 2.0 * M)


def elliptic_fixed_point(M: float) -> tuple[float, float]:
    """Point of the orientable elliptic branch (exists for M >= -1)."""
    x = -1.0 + math.sqrt(1.0 + M)
    return (x, x)


def elliptic_two_cycle(M: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Points of the non-orientable 2-cycle (exists for M > 0)."""
    cyc = _two_cycle(M)
    if cyc is None:
        raise ValueError("the 2-cycle exists only for M > 0")
    return cyc


def _has_elliptic(M: float, orientable: bool) -> bool:
    # Raw |trace| < 2 test; the classification band would shift the edges.
    if orientable:
        return any(abs(p.trace) < 2.0 for p in analyze_orientable(M).fixed_points)
    return any(abs(c.trace) < 2.0 for c in analyze_nonorientable(M).two_cycles)


def detect_elliptic_boundaries(
    orientable: bool, lo: float = -2.0, hi: float = 4.0, n: int = 601, tol: float = 1e-13
) -> list[float]:
    """Locate the M values where the elliptic orbit appears or disappears.

    Scans an M grid for changes of the "elliptic orbit exists" indicator and
    refines every change by bisection to width ``tol``.
    """
    grid = np.linspace(lo, hi, n)
    flags = [_has_elliptic(float(m), orientable) for m in grid]
    edges = []
    for m0, m1, f0, f1 in zip(grid[:-1], grid[1:], flags[:-1], flags[1:]):
        if f0 == f1:
            continue
        a, b = float(m0), float(m1)
        while b - a > tol:
            mid = 0.5 * (a + b)
            if _has_elliptic(mid, orientable) == f0:
                a = mid
            else:
                b = mid
        edges.append(0.5 * (a + b))
    return edges
