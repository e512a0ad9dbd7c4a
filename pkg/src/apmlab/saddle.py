"""The local saddle map T0 in Birkhoff-Moser form and its k-fold iterates.

T0:  x' = lam * x * B(xy),  y' = gamma * y / B(xy),  B(u) = 1 + sum_i beta_i u^i.

The Jacobian is identically lam*gamma for every polynomial B.  The product
u = xy is multiplied by lam*gamma at each step, so B(u) is constant along
orbits (for lam*gamma = -1 the odd betas vanish and B is even).  This gives
exact closed forms for T0^k used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChartEscape, DomainError, ValidationError


@dataclass(frozen=True)
class SaddleNormalForm:
    """Saddle with multipliers lam, gamma = orientation / lam.

    ``orientation`` is the sign of lam*gamma.  Non-orientable saddles use
    lam < 0 and gamma = -1/lam > 0.
    """

    lam: float
    betas: tuple[float, ...] = ()
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not 0.0 < abs(self.lam) < 1.0:
            raise ValidationError(f"need 0 < |lambda| < 1, got {self.lam}")
        if self.orientation not in (1, -1):
            raise ValidationError("orientation must be +1 or -1")
        if self.orientation == -1:
            odd = [b for i, b in enumerate(self.betas, start=1) if i % 2 == 1 and b != 0.0]
            if odd:
                raise ValidationError("odd-index betas must vanish when lambda*gamma = -1")

    @property
    def gamma(self) -> float:
        return self.orientation / self.lam

    @property
    def linear(self) -> bool:
        return not any(self.betas)

    def B(self, u):
        u = np.asarray(u, dtype=float)
        acc = np.zeros_like(u)
        for b in reversed(self.betas):
            acc = (acc + b) * u
        return 1.0 + acc

    def dB(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        for i in range(len(self.betas), 0, -1):
            out = out * u + i * self.betas[i - 1]
        return out

    def tilde_betas(self, n: int | None = None) -> list[float]:
        """Coefficients of 1/B(u) = 1 + sum tilde_beta_i u^i."""
        n = len(self.betas) if n is None else n
        b = [1.0] + list(self.betas) + [0.0] * max(0, n - len(self.betas))
        inv = [1.0]
        for m in range(1, n + 1):
            inv.append(-sum(b[i] * inv[m - i] for i in range(1, m + 1)))
        return inv[1:]


@dataclass(frozen=True)
class CrossFormResult:
    xk: float
    y0: float
    k: int
    hat_betas: list[float] = field(default_factory=list)


def _checked_B(s: SaddleNormalForm, u, strict: bool = True):
    Bv = s.B(u)
    bad = np.asarray(Bv) <= 0.0
    if np.any(bad):
        if strict:
            raise DomainError("B(xy) <= 0: chart too large for the chosen betas")
        Bv = np.where(bad, np.nan, Bv)
    return Bv


def apply_T0(s: SaddleNormalForm, p):
    x, y = p
    Bv = _checked_B(s, np.multiply(x, y))
    return s.lam * x * Bv, s.gamma * y / Bv


def jacobian_T0(s: SaddleNormalForm, p) -> np.ndarray:
    x, y = float(p[0]), float(p[1])
    u = x * y
    Bv = float(_checked_B(s, u))
    dB = float(s.dB(u))
    return np.array(
        [
            [s.lam * (Bv + u * dB), s.lam * x * x * dB],
            [-s.gamma * y * y * dB / Bv**2, s.gamma * (1.0 / Bv - u * dB / Bv**2)],
        ]
    )


def iterate_T0(s: SaddleNormalForm, p, k: int, chart: tuple[float, float] | None = None):
    """Direct k-fold iteration.

    ``chart`` = (half-width in x, half-width in y) of the box |x|<=X, |y|<=Y the
    orbit must stay in; leaving it raises ChartEscape with the exit step.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    x, y = float(p[0]), float(p[1])
    for step in range(1, k + 1):
        x, y = apply_T0(s, (x, y))
        if chart is not None and (abs(x) > chart[0] or abs(y) > chart[1]):
            bound = "x" if abs(x) > chart[0] else "y"
            raise ChartEscape(f"T0 orbit left the chart at step {step}", step, bound)
    return x, y


def iterate_T0_with_jacobian(s: SaddleNormalForm, p, k: int, chart=None):
    """Direct iteration returning the image and the chain-rule differential."""
    x, y = float(p[0]), float(p[1])
    J = np.eye(2)
    for step in range(1, k + 1):
        J = jacobian_T0(s, (x, y)) @ J
        x, y = apply_T0(s, (x, y))
        if chart is not None and (abs(x) > chart[0] or abs(y) > chart[1]):
            bound = "x" if abs(x) > chart[0] else "y"
            raise ChartEscape(f"T0 orbit left the chart at step {step}", step, bound)
    return (x, y), J


def hat_betas(s: SaddleNormalForm, k: int, n: int) -> list[float]:
    """The polynomials hat_beta_1(k) = beta_1 k and hat_beta_2(k) = beta_1^2 k^2 + beta_2 k."""
    if n > 2:
        raise ValueError("hat_beta polynomials are available for n <= 2")
    b1 = s.betas[0] if len(s.betas) > 0 else 0.0
    b2 = s.betas[1] if len(s.betas) > 1 else 0.0
    return [b1 * k, b1 * b1 * k * k + b2 * k][:n]


def cross_form_T0k(s: SaddleNormalForm, x0: float, yk: float, k: int, n: int = 1) -> CrossFormResult:
    """Truncated cross form of T0^k: (x_k, y_0) from (x_0, y_k).

    x_k = lam^k x0 R(x0 yk),  y0 = gamma^-k yk R(x0 yk),
    R = 1 + sum_{i<=n} hat_beta_i(k) lam^(ik) (x0 yk)^i.
    """
    hb = hat_betas(s, k, n)
    w = x0 * yk
    R = 1.0 + sum(h * (s.lam ** (i * k)) * w**i for i, h in enumerate(hb, start=1))
    return CrossFormResult(s.lam**k * x0 * R, s.gamma ** (-k) * yk * R, k, hb)


def _solve_invariant(s: SaddleNormalForm, w, k: int, strict: bool = True):
    # u = x0*y0 solves u = w * B(u)^k with w = x0 * yk * gamma^-k.
    u = np.array(w, dtype=float)
    if s.linear or k == 0:
        return u
    for _ in range(60):
        Bv = _checked_B(s, u, strict)
        g = u - w * Bv**k
        dg = 1.0 - w * k * Bv ** (k - 1) * s.dB(u)
        step = g / dg
        u = u - step
        if not np.any(np.abs(step) > 1e-17 + 1e-16 * np.abs(u)):
            break
    return u


def exact_cross(s: SaddleNormalForm, x0, yk, k: int, strict: bool = True):
    """Exact cross form of T0^k (no truncation): returns (x_k, y_0).

    With ``strict=False`` points where B(xy) <= 0 give NaN instead of raising.
    """
    x0 = np.asarray(x0, dtype=float)
    yk = np.asarray(yk, dtype=float)
    w = x0 * yk * s.gamma ** (-k)
    u = _solve_invariant(s, w, k, strict)
    Bk = _checked_B(s, u, strict) ** k
    return s.lam**k * Bk * x0, s.gamma ** (-k) * Bk * yk


def forward_cross(s: SaddleNormalForm, x0, y0, k: int, strict: bool = True):
    """Exact y_k of T0^k(x0, y0), returned together with x_k."""
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    Bk = _checked_B(s, x0 * y0, strict) ** k
    return s.lam**k * Bk * x0, s.gamma**k * y0 / Bk
