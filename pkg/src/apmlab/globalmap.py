"""The global map T1 carrying a neighbourhood of M- = (0, y-) to one of M+ = (x+, 0).

Taylor form at M-, with eta = y - y-:

    x' - x+ = a x + b eta + e20 x^2 + e11 x eta + e02 eta^2 + ...
    y'      = mu + c x + d eta^2 + f20 x^2 + f11 x eta + f30 x^3 + f21 x^2 eta
              + f12 x eta^2 + f03 eta^3 + ...

Area preservation forces |bc| = 1 and R = 2ad - b f11 - 2c e02 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_TOL = 1e-12


@dataclass(frozen=True)
class GlobalMapCoeffs:
    x_plus: float
    y_minus: float
    mu: float
    a: float
    b: float
    c: float
    d: float
    e20: float = 0.0
    e11: float = 0.0
    e02: float = 0.0
    f20: float = 0.0
    f11: float = 0.0
    f30: float = 0.0
    f21: float = 0.0
    f12: float = 0.0
    f03: float = 0.0

    @property
    def bc_sign(self) -> int:
        return 1 if self.b * self.c > 0 else -1

    @property
    def R(self) -> float:
        return 2 * self.a * self.d - self.b * self.f11 - 2 * self.c * self.e02


@dataclass(frozen=True)
class Diagnostics:
    bc: float
    R: float
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_coeffs(c: GlobalMapCoeffs, tol: float = _TOL) -> Diagnostics:
    """Report violations of |bc| = 1, R = 0 and d != 0 with their magnitudes."""
    issues = []
    bc = c.b * c.c
    if abs(abs(bc) - 1.0) > tol:
        issues.append(f"|bc| = {abs(bc):.17g} differs from 1 by {abs(abs(bc) - 1.0):.3g}")
    if abs(c.R) > tol:
        issues.append(f"R = 2ad - b f11 - 2c e02 = {c.R:.17g} is not zero")
    if c.d == 0.0:
        issues.append("d = 0: the tangency is not quadratic")
    if c.x_plus <= 0 or c.y_minus <= 0:
        issues.append("x_plus and y_minus must be positive")
    return Diagnostics(bc, c.R, issues)


@dataclass(frozen=True)
class ExactGlobalMap:
    """Exactly area-preserving family realizing the Taylor data.

    y' = G(x, y) = mu + c x + d eta^2 + f03 eta^3
    x' = x+ + b eta - sigma (G - mu)

    The Jacobian is -bc at every point: the sigma terms cancel in the
    determinant.  The shear is applied to G - mu so that mu only moves the
    tangency vertically and leaves x+ and the induced a, e02 unchanged.
    """

    x_plus: float
    y_minus: float
    mu: float
    b: float
    c: float
    d: float
    sigma: float = 0.0
    f03: float = 0.0

    def __post_init__(self):
        if abs(abs(self.b * self.c) - 1.0) > _TOL:
            raise ValidationError(f"|bc| must equal 1, got {abs(self.b * self.c)!r}")
        if self.d == 0.0:
            raise ValidationError("d must be nonzero")
        if self.x_plus <= 0 or self.y_minus <= 0:
            raise ValidationError("x_plus and y_minus must be positive")

    family = "exact"

    def G(self, x, y):
        eta = np.asarray(y, dtype=float) - self.y_minus
        return self.mu + self.c * np.asarray(x, dtype=float) + self.d * eta**2 + self.f03 * eta**3

    def apply(self, p):
        x, y = p
        eta = np.asarray(y, dtype=float) - self.y_minus
        g = self.G(x, y)
        return self.x_plus + self.b * eta - self.sigma * (g - self.mu), g

    def jacobian(self, p) -> np.ndarray:
        eta = float(p[1]) - self.y_minus
        gy = 2 * self.d * eta + 3 * self.f03 * eta**2
        return np.array([[-self.sigma * self.c, self.b - self.sigma * gy], [self.c, gy]])

    def taylor(self) -> GlobalMapCoeffs:
        return taylor_of_T1(self)


@dataclass(frozen=True)
class JetGlobalMap:
    """Polynomial T1 given directly by its Taylor coefficients (testing mode).

    Area preservation holds only to the represented order.
    """

    coeffs: GlobalMapCoeffs

    family = "jet"

    @property
    def x_plus(self) -> float:
        return self.coeffs.x_plus

    @property
    def y_minus(self) -> float:
        return self.coeffs.y_minus

    @property
    def mu(self) -> float:
        return self.coeffs.mu

    @property
    def b(self) -> float:
        return self.coeffs.b

    @property
    def c(self) -> float:
        return self.coeffs.c

    @property
    def d(self) -> float:
        return self.coeffs.d

    def apply(self, p):
        k = self.coeffs
        x = np.asarray(p[0], dtype=float)
        e = np.asarray(p[1], dtype=float) - k.y_minus
        xb = k.x_plus + k.a * x + k.b * e + k.e20 * x * x + k.e11 * x * e + k.e02 * e * e
        yb = (
            k.mu + k.c * x + k.d * e * e + k.f20 * x * x + k.f11 * x * e
            + k.f30 * x**3 + k.f21 * x * x * e + k.f12 * x * e * e + k.f03 * e**3
        )
        return xb, yb

    def jacobian(self, p) -> np.ndarray:
        k = self.coeffs
        x = float(p[0])
        e = float(p[1]) - k.y_minus
        return np.array(
            [
                [k.a + 2 * k.e20 * x + k.e11 * e, k.b + k.e11 * x + 2 * k.e02 * e],
                [
                    k.c + 2 * k.f20 * x + k.f11 * e + 3 * k.f30 * x * x + 2 * k.f21 * x * e + k.f12 * e * e,
                    2 * k.d * e + k.f11 * x + k.f21 * x * x + 2 * k.f12 * x * e + 3 * k.f03 * e * e,
                ],
            ]
        )

    def taylor(self) -> GlobalMapCoeffs:
        return self.coeffs


def apply_T1(g, p):
    return g.apply(p)


def taylor_of_T1(g: ExactGlobalMap) -> GlobalMapCoeffs:
    """Exact Taylor coefficients of the exact family at (0, y-)."""
    if isinstance(g, JetGlobalMap):
        return g.coeffs
    s = g.sigma
    return GlobalMapCoeffs(
        x_plus=g.x_plus,
        y_minus=g.y_minus,
        mu=g.mu,
        a=-s * g.c,
        b=g.b,
        c=g.c,
        d=g.d,
        e02=-s * g.d,
        f03=g.f03,
    )
