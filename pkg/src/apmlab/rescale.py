"""Rescaling of first-return maps to the generalized conservative Henon map.

For large k the map T_k, written in suitable affine coordinates (X, Y) on
the strip sigma_k^0, is close to

    X' = Y,   Y' = M - nu1 X - Y^2 + nu2 (f03 / d^2) lam^k Y^3,

with nu1 = sign(-bc lam^k gamma^k) and nu2 = sign(lam^k gamma^k).  This module
builds those coordinates explicitly (at leading order, with the asymptotic
corrections dropped), provides the mu <-> M dictionary and the invariant s0,
and measures how far the conjugated T_k is from the limit map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartEscape, ValidationError
from .globalmap import GlobalMapCoeffs
from .henon import henon_step
from .model import ModelMap
from .retmap import ReturnMap

DEFAULT_BALL = 2.0
DEFAULT_GRID = 41


@dataclass(frozen=True)
class S0Invariant:
    value: float
    nu1: int


@dataclass(frozen=True)
class RescaledMap:
    k: int
    nu1: int
    nu2: int
    M: float
    cubic_coeff: float
    residual_bound: float
    ball_radius: float
    xy_coeff: float = 0.0

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "nu1": self.nu1,
            "nu2": self.nu2,
            "M": self.M,
            "cubic_coeff": self.cubic_coeff,
            "residual_bound": self.residual_bound,
            "ball_radius": self.ball_radius,
            "xy_coeff": self.xy_coeff,
        }


def nu_signs(model: ModelMap, k: int) -> tuple[int, int]:
    """(nu1, nu2) = (sign(-bc (lam gamma)^k), sign((lam gamma)^k))."""
    nu2 = 1 if model.saddle.orientation == 1 or k % 2 == 0 else -1
    bc = 1 if model.glob.b * model.glob.c > 0 else -1
    return -bc * nu2, nu2


def compute_s0(coeffs: GlobalMapCoeffs, nu1: int) -> S0Invariant:
    """s0 = d x+ (a c + f20 x+) + (1/2) f11 x+ (1 + nu1 - (1/2) f11 x+)."""
    if nu1 not in (1, -1):
        raise ValidationError("nu1 must be +1 or -1")
    c = coeffs
    f = c.f11 * c.x_plus
    val = c.d * c.x_plus * (c.a * c.c + c.f20 * c.x_plus) + 0.5 * f * (1 + nu1 - 0.5 * f)
    return S0Invariant(float(val), nu1)


def model_s0(model: ModelMap, k: int) -> float:
    nu1, _ = nu_signs(model, k)
    return compute_s0(model.coeffs, nu1).value


def _beta1(model: ModelMap) -> float:
    return model.saddle.betas[0] if model.saddle.betas else 0.0


def splitting_offset(model: ModelMap, k: int) -> float:
    """The mu-independent part lam^k (c x+ - nu2 y-)(1 + k beta1 lam^k x+ y-) of the M formula.

    For lam gamma = 1 this is lam^k y- alpha (1 + ...); for lam gamma = -1 and odd
    k the combination c x+ + y- = y- (alpha + 2) appears instead.
    """
    g = model.glob
    lam_k = model.lam**k
    _, nu2 = nu_signs(model, k)
    corr = 1.0 + k * _beta1(model) * lam_k * g.x_plus * g.y_minus
    return lam_k * (g.c * g.x_plus - nu2 * g.y_minus) * corr


def mu_of_M(model: ModelMap, k: int, M, s0: float | None = None, offset: float | None = None):
    """mu = -offset - (M + s0) lam^(2k) / d.  Shared by M_to_mu and the bifurcation curves."""
    s0 = model_s0(model, k) if s0 is None else s0
    offset = splitting_offset(model, k) if offset is None else offset
    return -offset - (np.asarray(M, dtype=float) + s0) * model.lam ** (2 * k) / model.glob.d


def mu_to_M(model: ModelMap, k: int, mu: float | None = None) -> float:
    """Henon parameter M of T_k with the asymptotic corrections set to zero."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    mu = model.mu if mu is None else mu
    lam2k = model.lam ** (2 * k)
    return float(-model.glob.d / lam2k * (mu + splitting_offset(model, k)) - model_s0(model, k))


def M_to_mu(model: ModelMap, k: int, M: float) -> float:
    if k < 1:
        raise ValidationError("k must be >= 1")
    return float(mu_of_M(model, k, M))


@dataclass(frozen=True)
class RescaleChart:
    """Affine chart (X, Y) <-> cross coordinates (x0, y_k) of sigma_k^0.

    Composition of: homoclinic shift, the scaling eta = C v, xi = b C u,
    the common shift by h = nu2 f11 x+ / 2, the mixing x = u + n1 v,
    y = v + n2 u and the final shift by lam^k a / 2.
    """

    k: int
    nu1: int
    nu2: int
    x_shift: float  # x+ (1 + a lam^k)
    y_minus: float
    C: float
    A: float
    h: float
    n1: float
    n2: float
    X_shift: float
    Y_shift: float
    M: float

    def forward(self, x0, yk):
        u = (np.asarray(x0, dtype=float) - self.x_shift) / self.A - self.h
        v = (np.asarray(yk, dtype=float) - self.y_minus) / self.C - self.h
        x = u + self.n1 * v
        y = v + self.n2 * u
        return x - self.X_shift, y - self.Y_shift

    def inverse(self, X, Y):
        x = np.asarray(X, dtype=float) + self.X_shift
        y = np.asarray(Y, dtype=float) + self.Y_shift
        det = 1.0 - self.n1 * self.n2
        u = (x - self.n1 * y) / det
        v = (y - self.n2 * x) / det
        return self.x_shift + self.A * (u + self.h), self.y_minus + self.C * (v + self.h)


def rescale_chart(model: ModelMap, k: int, M: float | None = None) -> RescaleChart:
    """Leading-order rescaling coordinates for T_k at the model's mu (or at a target M)."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    co = model.coeffs
    nu1, nu2 = nu_signs(model, k)
    lam_k = model.lam**k
    M = mu_to_M(model, k) if M is None else float(M)
    C = -nu2 * lam_k / co.d
    A = co.b * C
    f = co.f11 * co.x_plus
    h = nu2 * f / 2.0
    n1 = -nu2 * co.e02 * lam_k / (co.b * co.d)
    n2 = co.a * lam_k - nu1 * n1
    return RescaleChart(
        k=k,
        nu1=nu1,
        nu2=nu2,
        x_shift=co.x_plus * (1.0 + co.a * lam_k),
        y_minus=co.y_minus,
        C=C,
        A=A,
        h=h,
        n1=n1,
        n2=n2,
        X_shift=co.a * lam_k / 2.0 + n1 * M,
        Y_shift=co.a * lam_k / 2.0,
        M=M,
    )


def ball_grid(radius: float, n: int = DEFAULT_GRID) -> tuple[np.ndarray, np.ndarray]:
    """Points of an n x n grid on [-R, R]^2 lying in the closed disc of radius R."""
    t = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(t, t, indexing="ij")
    keep = X**2 + Y**2 <= radius**2 * (1 + 1e-12)
    return X[keep], Y[keep]


def rescaled_Tk(model: ModelMap, k: int, ball_radius: float = DEFAULT_BALL,
                n: int = DEFAULT_GRID) -> RescaledMap:
    """Conjugate T_k by the rescaling chart and measure the distance to the limit map.

    Raises ChartEscape when part of the ball is not inside the strip chart,
    naming the violated half-width.
    """
    ch = rescale_chart(model, k)
    X, Y = ball_grid(ball_radius, n)
    x0, yk = ch.inverse(X, Y)
    g = model.glob
    over_x = np.max(np.abs(x0 - g.x_plus)) - model.chart.eps_x
    over_y = np.max(np.abs(yk - g.y_minus)) - model.chart.eps_y
    if over_x > 0 or over_y > 0:
        bound = "eps_x" if over_x > 0 else "eps_y"
        raise ChartEscape(
            f"rescaled ball of radius {ball_radius} exceeds the strip chart ({bound}) at k={k}",
            k,
            bound,
        )
    xb, ykb = ReturnMap(model, k).cross_image(x0, yk, strict=True)
    Xb, Yb = ch.forward(xb, ykb)
    cubic = ch.nu2 * model.coeffs.f03 * model.lam**k / g.d**2
    Xh, Yh = henon_step(X, Y, ch.M, ch.nu1 == 1, cubic)
    res = float(max(np.max(np.abs(Xb - Xh)), np.max(np.abs(Yb - Yh))))
    # least-squares quadratic fit of the second component to expose any XY term
    basis = np.column_stack([np.ones_like(X), X, Y, X * X, X * Y, Y * Y, Y**3])
    coef, *_ = np.linalg.lstsq(basis, Yb, rcond=None)
    return RescaledMap(k, ch.nu1, ch.nu2, ch.M, float(cubic), res, ball_radius, float(coef[4]))


def henon_to_cross(model: ModelMap, k: int, X, Y, M: float | None = None):
    """Map a point of the limit Henon plane back to cross coordinates of sigma_k^0."""
    return rescale_chart(model, k, M).inverse(X, Y)
