"""Truncated bivariate power series and the canonical normal-form reduction of saddle maps.

A :class:`Jet2` of order D stores the coefficients c[i, j] of x^i y^j for
i + j <= D in a dense (D+1) x (D+1) table.  Products and compositions drop
every monomial of total degree above D.

The reduction conjugates a saddle germ (lam x + ..., gamma y + ...) by
canonical changes generated by V(x, eta) = x eta + W(x, eta):

    xi = dV/d eta,   y = dV/dx,

and removes all non-resonant monomials degree by degree, leaving

    x' = lam x (1 + sum beta_i (xy)^i),   y' = gamma y (1 + sum tilde_beta_i (xy)^i).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from functools import lru_cache

from .errors import ValidationError

DIVISOR_TOL = 1e-8


class Jet2:
    """Polynomial in (x, y) truncated at total degree ``order``."""

    __slots__ = ("c", "order")

    def __init__(self, coeffs, order: int):
        if order < 0:
            raise ValueError("order must be >= 0")
        c = np.zeros((order + 1, order + 1))
        src = np.asarray(coeffs, dtype=float)
        n0 = min(src.shape[0], order + 1)
        n1 = min(src.shape[1], order + 1)
        c[:n0, :n1] = src[:n0, :n1]
        c *= _mask(order)
        if not np.all(np.isfinite(c)):
            raise ValueError("jet coefficients must be finite")
        self.c = c
        self.order = order

    @classmethod
    def _raw(cls, c: np.ndarray, order: int) -> "Jet2":
        # Internal constructor: c is already (order+1)^2 and masked.
        obj = cls.__new__(cls)
        obj.c = c
        obj.order = order
        return obj

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls, order: int) -> "Jet2":
        return cls(np.zeros((1, 1)), order)

    @classmethod
    def const(cls, value: float, order: int) -> "Jet2":
        return cls(np.array([[value]]), order)

    @classmethod
    def var(cls, index: int, order: int) -> "Jet2":
        c = np.zeros((2, 2))
        c[1 - index, index] = 1.0
        return cls(c, order)

    @classmethod
    def from_terms(cls, terms, order: int) -> "Jet2":
        c = np.zeros((order + 1, order + 1))
        for i, j, v in terms:
            i, j = int(i), int(j)
            if i < 0 or j < 0:
                raise ValueError("monomial exponents must be non-negative")
            if i + j <= order:
                c[i, j] += float(v)
        return cls(c, order)

    def terms(self, tol: float = 0.0) -> list[tuple[int, int, float]]:
        idx = np.argwhere(np.abs(self.c) > tol)
        return [(int(i), int(j), float(self.c[i, j])) for i, j in sorted(map(tuple, idx))]

    def coef(self, i: int, j: int) -> float:
        if i < 0 or j < 0 or i + j > self.order:
            return 0.0
        return float(self.c[i, j])

    def with_order(self, order: int) -> "Jet2":
        return Jet2(self.c, order)

    def copy(self) -> "Jet2":
        return Jet2(self.c, self.order)

    # arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.const(float(other), self.order)

    def __add__(self, other) -> "Jet2":
        other = self._coerce(other)
        D = min(self.order, other.order)
        return Jet2._raw(self.c[: D + 1, : D + 1] + other.c[: D + 1, : D + 1], D)

    __radd__ = __add__

    def __neg__(self) -> "Jet2":
        return Jet2._raw(-self.c, self.order)

    def __sub__(self, other) -> "Jet2":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Jet2":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Jet2":
        if not isinstance(other, Jet2):
            return Jet2._raw(self.c * float(other), self.order)
        D = min(self.order, other.order)
        a = self.c[: D + 1, : D + 1]
        b = other.c[: D + 1, : D + 1]
        P, Q, T = _product_index(D)
        out = np.bincount(T, a.ravel()[P] * b.ravel()[Q], minlength=(D + 1) ** 2)
        return Jet2._raw(out.reshape(D + 1, D + 1), D)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Jet2":
        if n < 0:
            raise ValueError("negative powers are not supported")
        out = Jet2.const(1.0, self.order)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Jet2) and self.order == other.order and np.array_equal(self.c, other.c)

    def __repr__(self) -> str:
        return f"Jet2(order={self.order}, terms={self.terms()})"

    # calculus and evaluation ------------------------------------------
    def deriv(self, index: int) -> "Jet2":
        """Partial derivative; the result has order D-1."""
        D = self.order
        if D == 0:
            return Jet2.zero(0)
        out = np.zeros((D, D))
        if index == 0:
            out[:, :] = (np.arange(1, D + 1)[:, None] * self.c[1:, :D])
        else:
            out[:, :] = (np.arange(1, D + 1)[None, :] * self.c[:D, 1:])
        return Jet2(out, D - 1)

    def degree_part(self, s: int) -> "Jet2":
        m = np.add.outer(np.arange(self.order + 1), np.arange(self.order + 1)) == s
        return Jet2(self.c * m, self.order)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.c)))

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for i in range(self.order, -1, -1):
            row = np.zeros_like(out)
            for j in range(self.order - i, -1, -1):
                row = row * y + self.c[i, j]
            out = out * x + row
        return out

    def compose(self, X: "Jet2", Y: "Jet2") -> "Jet2":
        """Substitute the jets X, Y for the variables; exact to the smallest order."""
        D = min(self.order, X.order, Y.order)
        X = X.with_order(D)
        Y = Y.with_order(D)
        ypow = [Jet2.const(1.0, D)]
        for _ in range(self.order):
            ypow.append(ypow[-1] * Y)
        out = Jet2.zero(D)
        # Horner in X over the rows sum_j c[i, j] Y^j.
        for i in range(self.order, -1, -1):
            row = Jet2.zero(D)
            for j in range(self.order - i + 1):
                if self.c[i, j] != 0.0:
                    row = row + ypow[j] * self.c[i, j]
            out = out * X + row
        return out


@lru_cache(maxsize=None)
def _mask(order: int) -> np.ndarray:
    i = np.arange(order + 1)
    return (np.add.outer(i, i) <= order).astype(float)


@lru_cache(maxsize=None)
def _product_index(order: int):
    """Flat index triples (p, q, p+q) for all monomial pairs of total degree <= order."""
    n = order + 1
    P, Q, T = [], [], []
    for i in range(n):
        for j in range(n - i):
            for k in range(n - i - j):
                for l in range(n - i - j - k):
                    P.append(i * n + j)
                    Q.append(k * n + l)
                    T.append((i + k) * n + j + l)
    return np.array(P), np.array(Q), np.array(T)


@dataclass(frozen=True)
class JetMap2:
    """Planar map germ at the origin given by its two component jets."""

    fx: Jet2
    fy: Jet2

    @property
    def order(self) -> int:
        return min(self.fx.order, self.fy.order)

    @property
    def lam(self) -> float:
        return self.fx.coef(1, 0)

    @property
    def gamma(self) -> float:
        return self.fy.coef(0, 1)

    @classmethod
    def identity(cls, order: int) -> "JetMap2":
        return cls(Jet2.var(0, order), Jet2.var(1, order))

    @classmethod
    def linear(cls, lam: float, gamma: float, order: int) -> "JetMap2":
        return cls(Jet2.var(0, order) * lam, Jet2.var(1, order) * gamma)

    @classmethod
    def birkhoff_moser(cls, lam: float, gamma: float, betas, order: int) -> "JetMap2":
        """Jet of x' = lam x B(xy), y' = gamma y / B(xy)."""
        x = Jet2.var(0, order)
        y = Jet2.var(1, order)
        u = x * y
        B = Jet2.const(1.0, order)
        inv = Jet2.const(1.0, order)
        b = [1.0] + [float(v) for v in betas]
        n = order // 2 + 1
        b += [0.0] * max(0, n + 1 - len(b))
        inv_c = [1.0]
        for m in range(1, n + 1):
            inv_c.append(-sum(b[i] * inv_c[m - i] for i in range(1, m + 1)))
        upow = Jet2.const(1.0, order)
        for m in range(1, n + 1):
            upow = upow * u
            B = B + upow * b[m]
            inv = inv + upow * inv_c[m]
        return cls(x * B * lam, y * inv * gamma)

    def linear_part(self) -> np.ndarray:
        return np.array(
            [[self.fx.coef(1, 0), self.fx.coef(0, 1)], [self.fy.coef(1, 0), self.fy.coef(0, 1)]]
        )

    def is_diagonal_saddle(self, tol: float = 1e-12) -> bool:
        return (
            abs(self.fx.coef(0, 0)) <= tol
            and abs(self.fy.coef(0, 0)) <= tol
            and abs(self.fx.coef(0, 1)) <= tol
            and abs(self.fy.coef(1, 0)) <= tol
            and abs(abs(self.lam * self.gamma) - 1.0) <= tol
        )

    def with_order(self, order: int) -> "JetMap2":
        return JetMap2(self.fx.with_order(order), self.fy.with_order(order))

    def evaluate(self, x, y):
        return self.fx.evaluate(x, y), self.fy.evaluate(x, y)

    def max_abs_diff(self, other: "JetMap2") -> float:
        D = min(self.order, other.order)
        return max((self.fx.with_order(D) - other.fx.with_order(D)).max_abs(),
                   (self.fy.with_order(D) - other.fy.with_order(D)).max_abs())


def jet_compose(outer: JetMap2, inner: JetMap2) -> JetMap2:
    """Taylor expansion of outer o inner, exact to the smallest order."""
    return JetMap2(outer.fx.compose(inner.fx, inner.fy), outer.fy.compose(inner.fx, inner.fy))


def jet_inverse(F: JetMap2) -> JetMap2:
    """Degree-by-degree inverse of a germ with invertible linear part and no constant term."""
    D = F.order
    if abs(F.fx.coef(0, 0)) > 0 or abs(F.fy.coef(0, 0)) > 0:
        raise ValueError("jet_inverse needs a germ fixing the origin")
    L = F.linear_part()
    if abs(np.linalg.det(L)) < 1e-14:
        raise ValueError("linear part is singular")
    Li = np.linalg.inv(L)
    x = Jet2.var(0, D)
    y = Jet2.var(1, D)
    lin_x = x * L[0, 0] + y * L[0, 1]
    lin_y = x * L[1, 0] + y * L[1, 1]
    Nx = F.fx.with_order(D) - lin_x
    Ny = F.fy.with_order(D) - lin_y
    G = JetMap2(x * Li[0, 0] + y * Li[0, 1], x * Li[1, 0] + y * Li[1, 1])
    for _ in range(D + 1):
        rx = x - Nx.compose(G.fx, G.fy)
        ry = y - Ny.compose(G.fx, G.fy)
        new = JetMap2(rx * Li[0, 0] + ry * Li[0, 1], rx * Li[1, 0] + ry * Li[1, 1])
        if new.fx == G.fx and new.fy == G.fy:
            break
        G = new
    return G


def jet_jacobian_det(F: JetMap2) -> Jet2:
    """Determinant of the differential, as a jet of order D-1."""
    if F.order < 2:
        raise ValueError("need order >= 2")
    fx = F.fx.with_order(F.order)
    fy = F.fy.with_order(F.order)
    return fx.deriv(0) * fy.deriv(1) - fx.deriv(1) * fy.deriv(0)


# canonical changes --------------------------------------------------------


def _generating_remainder(V: Jet2) -> Jet2:
    """W = V - x eta after checking V is a near-identity generating function."""
    if abs(V.coef(1, 1) - 1.0) > 1e-12:
        raise ValidationError("generating function must contain x*eta with coefficient 1")
    low = [(i, j) for i, j, v in V.terms() if i + j <= 2 and (i, j) != (1, 1)]
    if low:
        raise ValidationError(f"generating function has forbidden low-order monomials {low}")
    c = V.c.copy()
    c[1, 1] = 0.0
    return Jet2(c, V.order)


def _solve_fixed(update, start: Jet2, D: int) -> Jet2:
    # Degree-graded contraction: each sweep fixes one more degree.
    cur = start
    for _ in range(D + 2):
        new = update(cur)
        if new == cur:
            return new
        cur = new
    return cur


def canonical_change(V: Jet2, order: int) -> tuple[JetMap2, JetMap2]:
    """Jets of the change (x, y) -> (xi, eta) generated by V and of its inverse.

    The change is defined implicitly by xi = dV/d eta, y = dV/dx.  V is treated
    as an exact polynomial, so its derivatives are used at full order.
    """
    W = _generating_remainder(V)
    D = order
    Wx = W.deriv(0).with_order(D)
    We = W.deriv(1).with_order(D)
    x = Jet2.var(0, D)
    y = Jet2.var(1, D)
    # forward: eta solves eta = y - Wx(x, eta); then xi = x + W_eta(x, eta)
    eta = _solve_fixed(lambda e: y - Wx.compose(x, e), y, D)
    xi = x + We.compose(x, eta)
    forward = JetMap2(xi, eta)
    # inverse: given (xi, eta), x solves x = xi - W_eta(x, eta); then y = eta + Wx(x, eta)
    xs = _solve_fixed(lambda X: x - We.compose(X, y), x, D)
    ys = y + Wx.compose(xs, y)
    inverse = JetMap2(xs, ys)
    return forward, inverse


def apply_generating(F: JetMap2, V: Jet2) -> JetMap2:
    """Conjugate F by the canonical change generated by V: returns Phi o F o Phi^-1."""
    D = F.order
    phi, phi_inv = canonical_change(V, D)
    return jet_compose(phi, jet_compose(F, phi_inv))


# normal form --------------------------------------------------------------


@dataclass(frozen=True)
class NormalFormResult:
    betas: list[float]
    tilde_betas: list[float]
    change: JetMap2
    change_inverse: JetMap2
    reduced: JetMap2
    nonresonant_residual: float

    def to_dict(self) -> dict:
        return {
            "betas": self.betas,
            "tilde_betas": self.tilde_betas,
            "nonresonant_residual": self.nonresonant_residual,
            "reduced": jetmap_to_dict(self.reduced),
            "change": jetmap_to_dict(self.change),
        }


def _resonant_x(i: int, j: int, orientation: int) -> bool:
    return i - j == 1 and (orientation == 1 or j % 2 == 0)


def _resonant_y(i: int, j: int, orientation: int) -> bool:
    return j - i == 1 and (orientation == 1 or i % 2 == 0)


def nonresonant_residual(F: JetMap2, max_degree: int) -> float:
    """Largest non-resonant coefficient of degree 2..max_degree."""
    orient = 1 if F.lam * F.gamma > 0 else -1
    worst = 0.0
    for s in range(2, max_degree + 1):
        for i in range(s + 1):
            j = s - i
            if not _resonant_x(i, j, orient):
                worst = max(worst, abs(F.fx.coef(i, j)))
            if not _resonant_y(i, j, orient):
                worst = max(worst, abs(F.fy.coef(i, j)))
    return worst


def normal_form_reduce(F: JetMap2, n: int, gauge=None) -> NormalFormResult:
    """Reduce a saddle germ to Birkhoff-Moser form through degree 2n+1.

    At each degree s the generating monomial w x^p eta^q (p + q = s + 1) is
    chosen to cancel the x-component monomial x^p y^(q-1), dividing by
    q (lam^p gamma^(q-1) - lam).  The y-component terms vanish as a consequence
    of area preservation, except x^s, which has no x-role partner and is
    cancelled through the monomial x^(s+1).  When lam*gamma = -1 the odd powers
    (x eta)^(i+1) are non-resonant and remove x(xy)^i and y(xy)^i together.

    ``gauge`` optionally supplies the free coefficients of the resonant
    monomials (x eta)^(i+1) as a callable ``gauge(i) -> float``; any choice
    yields the same betas.
    """
    D = F.order
    if 2 * n + 1 > D:
        raise ValidationError(f"order {D} is too small for n = {n} (need 2n+1 <= D)")
    lam, gamma = F.lam, F.gamma
    if abs(abs(lam * gamma) - 1.0) > 1e-12:
        raise ValidationError(f"|lambda*gamma| = {abs(lam * gamma)!r} differs from 1")
    if not 0.0 < abs(lam) < 1.0 < abs(gamma):
        raise ValidationError("need 0 < |lambda| < 1 < |gamma|")
    if not F.is_diagonal_saddle():
        raise ValidationError("the linear part must be diagonal and the origin fixed")
    orient = 1 if lam * gamma > 0 else -1

    G = F
    change = JetMap2.identity(D)
    change_inv = JetMap2.identity(D)
    for s in range(2, 2 * n + 2):
        wc = np.zeros((D + 2, D + 2))
        wc[1, 1] = 1.0
        for p in range(s + 2):
            q = s + 1 - p
            if q >= 1:
                i, j = p, q - 1
                if _resonant_x(i, j, orient):
                    wc[p, q] = float(gauge(i - 1)) if gauge is not None and p == q else 0.0
                    continue
                div = q * (lam**i * gamma**j - lam)
                coef = G.fx.coef(i, j)
            else:
                div = -(s + 1) * (lam**s - gamma)
                coef = G.fy.coef(s, 0)
            if abs(div) < DIVISOR_TOL:
                raise ValidationError(f"homological divisor {div:.3g} too small at degree {s}")
            wc[p, q] = -coef / div
        V = Jet2(wc, D + 1)
        phi, phi_inv = canonical_change(V, D)
        G = jet_compose(phi, jet_compose(G, phi_inv))
        change = jet_compose(phi, change)
        change_inv = jet_compose(change_inv, phi_inv)

    betas = [G.fx.coef(i + 1, i) / lam for i in range(1, n + 1)]
    tilde = [G.fy.coef(i, i + 1) / gamma for i in range(1, n + 1)]
    resid = nonresonant_residual(G, 2 * n + 1)
    return NormalFormResult(betas, tilde, change, change_inv, G, resid)


# JSON ----------------------------------------------------------------------


def jetmap_to_dict(F: JetMap2) -> dict:
    return {
        "order": F.order,
        "fx": [[i, j, v] for i, j, v in F.fx.terms()],
        "fy": [[i, j, v] for i, j, v in F.fy.terms()],
    }


def jetmap_from_dict(data: dict) -> JetMap2:
    try:
        D = int(data["order"])
        return JetMap2(Jet2.from_terms(data["fx"], D), Jet2.from_terms(data["fy"], D))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed jet description: {exc}") from exc


def load_jetmap(path: str | Path) -> JetMap2:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from exc
    return jetmap_from_dict(data)


def random_canonical_map(rng: np.random.Generator, lam: float, orientation: int, order: int,
                         scale: float = 0.3, betas=()) -> JetMap2:
    """Area-preserving germ Phi^-1 o BM o Phi with a random generating function.

    BM is the Birkhoff-Moser jet with the given betas; Phi comes from
    V = x eta + W with random W of degrees 3..order+1 and coefficients of size
    ``scale``.
    """
    wc = np.zeros((order + 2, order + 2))
    wc[1, 1] = 1.0
    for s in range(3, order + 2):
        for p in range(s + 1):
            wc[p, s - p] = scale * rng.uniform(-1.0, 1.0)
    phi, phi_inv = canonical_change(Jet2(wc, order + 1), order)
    bm = JetMap2.birkhoff_moser(lam, orientation / lam, betas, order)
    return jet_compose(phi_inv, jet_compose(bm, phi))
