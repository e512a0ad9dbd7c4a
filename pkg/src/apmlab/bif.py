"""Cascades of elliptic orbits, bifurcation curves in the (mu, alpha) plane,
global-resonance checks and the s0 pair-invariance transformations.

Periodic orbits of T_k are continued in the rescaled coordinates of
``rescale``, where the strip is O(1) wide and the parameter is M.  A
bifurcation value is located by Newton's method on the augmented system
(orbit equations, trace - target) in the unknowns (X, Y, ..., M); this is
regular at folds, where a one-parameter bracket on the trace does not exist.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .globalmap import GlobalMapCoeffs
from .henon import elliptic_fixed_point, elliptic_two_cycle
from .model import ModelMap
from .rescale import M_to_mu, compute_s0, model_s0, mu_of_M, mu_to_M, nu_signs, rescale_chart
from .retmap import ReturnMap, eval_Tk, search_periodic
from .saddle import SaddleNormalForm, exact_cross
from .stability import FIXED_POINT_RESONANCES, TWO_CYCLE_RESONANCES, classify_multipliers

AUG_TOL = 1e-10
AUG_MAXIT = 60
FD_H = 1e-7

# (M value, trace target, period, role) of the cascade endpoints and resonances
SYMPLECTIC_ENDPOINTS = ((-1.0, 2.0, 1, "plus"), (3.0, -2.0, 1, "minus"))
NONORIENTABLE_ENDPOINTS = ((0.0, 0.0, 1, "plus"), (1.0, -2.0, 2, "minus"))
SYMPLECTIC_RESONANCES = ((0.0, 0.0, 1, "pi/2"), (1.25, -1.0, 1, "2pi/3"))
NONORIENTABLE_RESONANCES = (
    (0.5, 0.0, 2, "pi/2"),
    (0.75, -1.0, 2, "2pi/3"),
    (0.625, -0.5, 2, "acos(-1/4)"),
)


# kinds --------------------------------------------------------------------------


def cascade_kind(model: ModelMap, k: int) -> str:
    """Interval kind of T_k: e_k, e_k2 (2-cycles), tilde_e_2m or tilde_e2_2m+1."""
    nu1, _ = nu_signs(model, k)
    if model.saddle.orientation == 1:
        return "e_k" if nu1 == 1 else "e_k2"
    return "tilde_e_2m" if k % 2 == 0 else "tilde_e2_2m+1"


def orbit_period(model: ModelMap, k: int) -> int:
    """Period (in T_k) of the elliptic orbit of the cascade: 1 if nu1 = +1, else 2."""
    return 1 if nu_signs(model, k)[0] == 1 else 2


def _tables(model: ModelMap, k: int):
    if orbit_period(model, k) == 1:
        return SYMPLECTIC_ENDPOINTS, SYMPLECTIC_RESONANCES
    return NONORIENTABLE_ENDPOINTS, NONORIENTABLE_RESONANCES


# orbit solves in rescaled coordinates ----------------------------------------------


def _cycle_trace_det(model: ModelMap, k: int, x0s, yks) -> tuple[float, float]:
    _, y0s = exact_cross(model.saddle, np.asarray(x0s), np.asarray(yks), k, strict=False)
    J = np.eye(2)
    rm = ReturnMap(model, k)
    for x, y in zip(np.atleast_1d(x0s), np.atleast_1d(y0s)):
        _, Jk = eval_Tk(rm, (float(x), float(y)), check=False)
        J = Jk @ J
    return float(np.trace(J)), float(np.linalg.det(J))


@dataclass(frozen=True)
class OrbitSolution:
    M: float
    mu: float
    states: np.ndarray  # rescaled (X, Y) rows
    cross: np.ndarray  # (x0, y_k) rows
    trace: float
    det: float
    residual: float


def solve_orbit(model: ModelMap, k: int, period: int, seed_XY, M: float | None = None,
                target: float | None = None, tol: float = AUG_TOL) -> OrbitSolution | None:
    """Newton for a period-`period` orbit of T_k in rescaled coordinates.

    With ``target`` the parameter M is an extra unknown (seeded by ``M``) and
    the extra equation is trace(DT_k^period) = target.  Without it the model's
    own mu is used.  Returns None when Newton fails.
    """
    M_ref = mu_to_M(model, k) if M is None else float(M)
    ch = rescale_chart(model, k, M_ref)
    aug = target is not None
    p = period

    def system(z):
        m = model.with_mu(M_to_mu(model, k, z[-1])) if aug else model
        X, Y = z[0:2 * p:2], z[1:2 * p:2]
        x0, yk = ch.inverse(X, Y)
        xb, ykb = ReturnMap(m, k).cross_image(x0, yk, strict=False)
        Xb, Yb = ch.forward(xb, ykb)
        nxt = (np.arange(p) + 1) % p
        res = np.empty(z.size)
        res[0:2 * p:2] = Xb - X[nxt]
        res[1:2 * p:2] = Yb - Y[nxt]
        if aug:
            res[-1] = _cycle_trace_det(m, k, x0, yk)[0] - target
        return res

    z = np.array(list(np.ravel(seed_XY)) + ([M_ref] if aug else []), dtype=float)
    n = z.size
    rn = np.inf
    for _ in range(AUG_MAXIT):
        r = system(z)
        rn = float(np.max(np.abs(r)))
        if not np.isfinite(rn):
            return None
        if rn < tol:
            break
        J = np.empty((n, n))
        for j in range(n):
            zp = z.copy()
            zp[j] += FD_H
            J[:, j] = (system(zp) - r) / FD_H
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        sn = float(np.max(np.abs(step)))
        if sn > 0.5:
            step *= 0.5 / sn
        z = z + step
    else:
        return None
    Mv = float(z[-1]) if aug else M_ref
    m = model.with_mu(M_to_mu(model, k, Mv)) if aug else model
    XY = z[: 2 * p].reshape(p, 2)
    x0, yk = ch.inverse(XY[:, 0], XY[:, 1])
    g = model.glob
    inside = np.all(np.abs(x0 - g.x_plus) <= model.chart.eps_x) and np.all(
        np.abs(yk - g.y_minus) <= model.chart.eps_y
    )
    if not inside:
        return None
    tr, det = _cycle_trace_det(m, k, x0, yk)
    return OrbitSolution(Mv, m.mu, XY, np.column_stack([x0, yk]), tr, det, rn)


def henon_seed(period: int, M: float):
    """Elliptic orbit of the limit map used as Newton seed."""
    if period == 1:
        return [elliptic_fixed_point(max(M, -1.0))]
    return list(elliptic_two_cycle(max(M, 1e-3)))


def locate_parameter(model: ModelMap, k: int, M_target: float, trace_target: float,
                     period: int) -> OrbitSolution | None:
    """Parameter value of T_k where the cascade orbit has the given trace."""
    if period == 1 and orbit_period(model, k) == 2:
        # fixed point with multipliers (+1, -1): seed at the origin of the Henon plane
        seed = [(0.0, 0.0)]
        M0 = M_target + 1e-3
    else:
        M0 = M_target
        # seed slightly inside the elliptic range to keep the orbit defined
        inner = {(-1.0, 1): -0.99, (1.0, 2): 0.99}.get((M_target, period), M_target)
        seed = henon_seed(period, inner)
    return solve_orbit(model, k, period, seed, M=M0, target=trace_target)


# cascades -----------------------------------------------------------------------------


@dataclass
class CascadeInterval:
    k: int
    kind: str
    mu_plus_detected: float | None
    mu_minus_detected: float | None
    mu_plus_formula: float
    mu_minus_formula: float
    resonance_mus: list[tuple[str, float | None, float]] = field(default_factory=list)
    complete: bool = True

    @property
    def detected(self) -> tuple[float, float] | None:
        if self.mu_plus_detected is None or self.mu_minus_detected is None:
            return None
        a, b = self.mu_plus_detected, self.mu_minus_detected
        return (min(a, b), max(a, b))

    @property
    def endpoint_error(self) -> float:
        if not self.complete:
            return math.inf
        return max(
            abs(self.mu_plus_detected - self.mu_plus_formula),
            abs(self.mu_minus_detected - self.mu_minus_formula),
        )

    def resonances_interior(self) -> bool:
        iv = self.detected
        if iv is None:
            return False
        return all(mu is not None and iv[0] < mu < iv[1] for _, mu, _ in self.resonance_mus)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "kind": self.kind,
            "mu_plus_detected": self.mu_plus_detected,
            "mu_minus_detected": self.mu_minus_detected,
            "mu_plus_formula": self.mu_plus_formula,
            "mu_minus_formula": self.mu_minus_formula,
            "resonance_mus": [list(r) for r in self.resonance_mus],
            "complete": self.complete,
        }


def cascade_interval(model: ModelMap, k: int) -> CascadeInterval:
    endpoints, resonances = _tables(model, k)
    det = {}
    form = {}
    complete = True
    for M_end, tr, per, role in endpoints:
        sol = locate_parameter(model, k, M_end, tr, per)
        form[role] = M_to_mu(model, k, M_end)
        det[role] = None if sol is None else sol.mu
        complete &= sol is not None
    res = []
    for M_res, tr, per, tag in resonances:
        sol = locate_parameter(model, k, M_res, tr, per)
        res.append((tag, None if sol is None else sol.mu, M_to_mu(model, k, M_res)))
        complete &= sol is not None
    return CascadeInterval(
        k, cascade_kind(model, k), det["plus"], det["minus"], form["plus"], form["minus"], res, complete
    )


def cascade_scan(model: ModelMap, k_range, mu_window: tuple[float, float] | None = None
                 ) -> list[CascadeInterval]:
    """Cascade intervals of elliptic orbits for every k in k_range.

    Intervals whose detected endpoints fall outside ``mu_window`` are flagged
    incomplete.
    """
    out = []
    for k in k_range:
        iv = cascade_interval(model, k)
        if mu_window is not None and iv.detected is not None:
            lo, hi = mu_window
            if iv.detected[0] < lo or iv.detected[1] > hi:
                iv.complete = False
        out.append(iv)
    return out


def intervals_disjoint(intervals: list[CascadeInterval]) -> bool:
    spans = sorted(iv.detected for iv in intervals if iv.detected is not None)
    if len(spans) < len(intervals):
        return False
    return all(a[1] < b[0] for a, b in zip(spans[:-1], spans[1:]))


def endpoint_budget_ratios(intervals: list[CascadeInterval], lam: float) -> list[float]:
    """|mu_detected - mu_formula| / (k |lam|^(3k)) for each interval."""
    return [iv.endpoint_error / (iv.k * abs(lam) ** (3 * iv.k)) for iv in intervals]


# curves ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class BifCurveSample:
    k: int
    curve_tag: str
    alpha: float
    mu: float
    alpha_kind: str = "alpha"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_CURVE_TAGS = {
    ("e_k", "plus"): "Bk_plus",
    ("e_k", "minus"): "Bk_minus",
    ("e_k2", "plus"): "Bk_pm1",
    ("e_k2", "minus"): "Bk_2minus",
    ("tilde_e_2m", "plus"): "tilde_Bk_plus",
    ("tilde_e_2m", "minus"): "tilde_Bk_minus",
    ("tilde_e2_2m+1", "plus"): "tilde_Bk_pm1",
    ("tilde_e2_2m+1", "minus"): "tilde_Bk_2minus",
}


def alpha_variable(model: ModelMap, k: int) -> tuple[str, float]:
    """The splitting invariant governing T_k: alpha, or alpha_tilde = alpha + 2 when
    lam gamma = -1 and k is odd."""
    g = model.glob
    alpha = g.c * g.x_plus / g.y_minus - 1.0
    if nu_signs(model, k)[1] == -1:
        return "alpha_tilde", alpha + 2.0
    return "alpha", alpha


def curve_mu(model: ModelMap, k: int, M: float, alpha):
    """mu on the bifurcation curve of parameter value M, as a function of alpha (or alpha_tilde)."""
    g = model.glob
    beta1 = model.saddle.betas[0] if model.saddle.betas else 0.0
    lam_k = model.lam**k
    corr = 1.0 + k * beta1 * lam_k * g.x_plus * g.y_minus
    offset = lam_k * g.y_minus * np.asarray(alpha, dtype=float) * corr
    return mu_of_M(model, k, M, offset=offset)


def bif_curves(model: ModelMap, k_range, alpha_grid) -> list[BifCurveSample]:
    """Samples of the endpoint curves of every cascade interval over an alpha grid."""
    out = []
    for k in k_range:
        kind = cascade_kind(model, k)
        akind, _ = alpha_variable(model, k)
        endpoints, _ = _tables(model, k)
        for M_end, _, _, role in endpoints:
            tag = _CURVE_TAGS[(kind, role)]
            mus = curve_mu(model, k, M_end, alpha_grid)
            for a, mu in zip(np.atleast_1d(alpha_grid), np.atleast_1d(mus)):
                out.append(BifCurveSample(k, tag, float(a), float(mu), akind))
    return out


def curve_axis_crossings(model: ModelMap, k: int) -> dict[str, tuple[float, float]]:
    """(alpha at mu = 0, mu at alpha = 0) for each endpoint curve of T_k."""
    kind = cascade_kind(model, k)
    endpoints, _ = _tables(model, k)
    g = model.glob
    s0 = model_s0(model, k)
    lam_k = model.lam**k
    beta1 = model.saddle.betas[0] if model.saddle.betas else 0.0
    corr = 1.0 + k * beta1 * lam_k * g.x_plus * g.y_minus
    out = {}
    for M_end, _, _, role in endpoints:
        a0 = -(M_end + s0) * lam_k / (g.d * g.y_minus * corr)
        out[_CURVE_TAGS[(kind, role)]] = (a0, float(curve_mu(model, k, M_end, 0.0)))
    return out


# global resonance ---------------------------------------------------------------------


@dataclass
class ResonanceRow:
    k: int
    kind: str
    expected: bool  # an elliptic orbit of the cascade type should exist at mu = 0
    found: bool
    M: float
    trace: float | None
    limit_trace: float | None

    @property
    def deviation(self) -> float | None:
        if self.trace is None or self.limit_trace is None:
            return None
        return abs(self.trace - self.limit_trace)


@dataclass
class GlobalResonanceReport:
    s0: dict[int, float]
    generic: bool
    rows: list[ResonanceRow]

    @property
    def failures(self) -> list[int]:
        return [r.k for r in self.rows if r.found != r.expected]

    @property
    def ok(self) -> bool:
        return not self.failures


def limit_trace(period: int, M: float) -> float | None:
    """Trace of the elliptic orbit of the limit map at parameter M (None if absent)."""
    if period == 1:
        if not -1.0 < M < 3.0:
            return None
        return -2.0 * elliptic_fixed_point(M)[0]
    if not 0.0 < M < 1.0:
        return None
    return 2.0 - 4.0 * M


def _nongeneric_s0(model: ModelMap, k: int) -> bool:
    s0 = model_s0(model, k)
    values = (0.0, -1.25) if orbit_period(model, k) == 1 else (-0.5, -0.75, -0.625)
    return any(abs(s0 - v) < 1e-9 for v in values)


def elliptic_orbit_exists(model: ModelMap, k: int) -> tuple[bool, float | None]:
    """Search sigma_k^0 for an elliptic orbit of the cascade type of T_k at the model's mu."""
    period = orbit_period(model, k)
    M = mu_to_M(model, k)
    if limit_trace(period, M) is not None:
        sol = solve_orbit(model, k, period, henon_seed(period, M))
        if sol is not None and abs(sol.trace) < 2.0 and sol.det > 0:
            return True, sol.trace
    rep = search_periodic(ReturnMap(model, k), period, n=24, m=16)
    for z in rep.points:
        tr, det = _cycle_trace_det(model, k, z[0::2], z[1::2])
        if det > 0 and abs(tr) < 2.0:
            if period == 2 and np.max(np.abs(z[:2] - z[2:])) <= 1e-8:
                continue
            return True, tr
    return False, None


def global_resonance_check(model: ModelMap, k_range, parity: int | None = None
                           ) -> GlobalResonanceReport:
    """Elliptic orbits of T_k at the model's mu for every k in k_range.

    For lam gamma = -1 models the resonant parity is the one whose splitting
    invariant (alpha for even k, alpha_tilde for odd k) vanishes; an elliptic
    orbit is expected exactly for those k.  ``parity`` overrides the choice.
    """
    ks = list(k_range)
    g = model.glob
    if model.saddle.orientation == -1 and parity is None:
        alpha = g.c * g.x_plus / g.y_minus - 1.0
        parity = 0 if abs(alpha) < abs(alpha + 2.0) else 1
    rows = []
    s0s = {}
    generic = True
    for k in ks:
        expected = parity is None or k % 2 == parity
        period = orbit_period(model, k)
        M = mu_to_M(model, k)
        s0s[k] = model_s0(model, k)
        if expected:
            generic &= not _nongeneric_s0(model, k)
        found, tr = elliptic_orbit_exists(model, k)
        lt = limit_trace(period, -s0s[k]) if expected else None
        rows.append(ResonanceRow(k, cascade_kind(model, k), expected, found, M, tr, lt))
    return GlobalResonanceReport(s0s, generic, rows)


# s0 invariance -------------------------------------------------------------------------


@dataclass(frozen=True)
class PairTransform:
    variant: str
    s0: float
    s0_transformed: float
    coeffs: GlobalMapCoeffs
    predicted_defect: float | None = None


def shift_plus(c: GlobalMapCoeffs, s: SaddleNormalForm) -> GlobalMapCoeffs:
    """Coefficients of T0 T1 for the pair (T0(M+), M-)."""
    lam, gam = s.lam, s.gamma
    b1 = s.betas[0] if s.betas else 0.0
    return dataclasses.replace(
        c,
        x_plus=lam * c.x_plus,
        b=lam * c.b,
        a=lam * c.a + lam * c.x_plus**2 * b1 * c.c,
        c=gam * c.c,
        d=gam * c.d,
        f20=gam * c.f20 - gam * c.c**2 * b1 * c.x_plus,
        f11=gam * c.f11,
    )


def shift_minus(c: GlobalMapCoeffs, s: SaddleNormalForm) -> GlobalMapCoeffs:
    """Coefficients of T1 T0 for the pair (M+, T0^-1(M-))."""
    lam, gam = s.lam, s.gamma
    b1 = s.betas[0] if s.betas else 0.0
    y2 = c.y_minus**2
    return dataclasses.replace(
        c,
        y_minus=c.y_minus / gam,
        b=gam * c.b,
        a=lam * c.a - c.b * b1 * y2 / gam,
        c=lam * c.c,
        f11=lam * gam * c.f11 - 2 * c.d * b1 * y2,
        d=c.d * gam**2,
        f20=lam**2 * (c.f20 - c.f11 * b1 * y2 + c.d * b1**2 * y2**2 + c.c * b1 * c.y_minus),
    )


def reflect_x(c: GlobalMapCoeffs) -> GlobalMapCoeffs:
    """Coordinate change x -> -x on Pi+ making a negative x+ positive."""
    return dataclasses.replace(c, x_plus=-c.x_plus, b=-c.b, c=-c.c, f11=-c.f11, e11=-c.e11, f21=-c.f21, f30=-c.f30)


def s0_pair_invariance(coeffs: GlobalMapCoeffs, saddle: SaddleNormalForm, variant: str,
                       nu1: int | None = None) -> PairTransform:
    """Recompute s0 after moving the homoclinic pair along the orbit.

    Variants: "plus" (T0(M+), M-), "minus" (M+, T0^-1(M-)) for lam gamma = 1;
    "single", "double_plus", "double_minus", "mixed" for lam gamma = -1.
    ``nu1`` defaults to -sign(bc).
    """
    if nu1 is None:
        nu1 = -1 if coeffs.b * coeffs.c > 0 else 1
    s0 = compute_s0(coeffs, nu1).value
    defect = None
    if saddle.orientation == 1:
        if variant == "plus":
            new = shift_plus(coeffs, saddle)
        elif variant == "minus":
            new = shift_minus(coeffs, saddle)
            b1 = saddle.betas[0] if saddle.betas else 0.0
            c = coeffs
            defect = c.d * b1 * c.x_plus * c.y_minus * (c.c * c.x_plus - c.b * c.c * c.y_minus
                                                        - c.y_minus * (1 + nu1))
        else:
            raise ValidationError(f"variant {variant!r} needs lambda*gamma = -1")
    else:
        if variant == "single":
            new = shift_plus(coeffs, saddle)
        elif variant == "double_plus":
            new = shift_plus(shift_plus(coeffs, saddle), saddle)
        elif variant == "double_minus":
            new = shift_minus(shift_minus(coeffs, saddle), saddle)
        elif variant == "mixed":
            new = shift_minus(reflect_x(shift_plus(coeffs, saddle)), saddle)
        else:
            raise ValidationError(f"unknown variant {variant!r}")
    # e02 does not enter s0; fix it by area preservation (R = 0) so the data stay valid
    new = dataclasses.replace(new, e02=(2 * new.a * new.d - new.b * new.f11) / (2 * new.c))
    s0_new = compute_s0(new, nu1).value
    return PairTransform(variant, s0, s0_new, new, defect)
