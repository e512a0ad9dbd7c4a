"""Semi-local structure near the tangency: invariants, classes, strips and
horseshoes, and the symbolic description of orbits that stay near the
homoclinic contour.

Strips sigma_k^0 (in Pi+) are the points reaching Pi- after exactly k
iterates of T0; sigma_k^1 = T0^k(sigma_k^0).  The horseshoe T1(sigma_j^1)
meets the strip sigma_i^0 in two components, one component or not at all;
the sign of d (gamma^-i y- - c lam^j x+) decides which for large i, j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, UnsupportedClass, ValidationError
from .model import ModelMap
from .rescale import compute_s0
from .retmap import (
    CONVERGED, DIVERGED, LEFT_CHART, STAGNATED, ReturnMap, dedupe_rows, multishoot_residual, solve_orbits,
)
from .saddle import exact_cross, forward_cross

COMPONENT_SAMPLES = 2048
TAU_TOL = 1e-9


class ClassTag(str, Enum):
    CLASS1 = "Class1"
    CLASS2 = "Class2"
    H3_1 = "H3_1"
    H3_2_1 = "H3_2_1"
    H3_2_2 = "H3_2_2"
    H3_3_1 = "H3_3_1"
    H3_3_2 = "H3_3_2"
    H3_4 = "H3_4"
    H3_5 = "H3_5"


class Verdict(str, Enum):
    REGULAR = "Regular"
    EMPTY = "Empty"
    BORDERLINE = "Borderline"
    IRREGULAR = "Irregular"


@dataclass(frozen=True)
class TangencyProfile:
    tau: float
    alpha: float
    alpha_tilde: float
    s0: float
    nu1: int
    class_tag: ClassTag
    lam: float
    orientation: int
    c: float
    d: float
    canonicalized: bool = False
    matched: bool = True
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "alpha": self.alpha,
            "alpha_tilde": self.alpha_tilde,
            "s0": self.s0,
            "nu1": self.nu1,
            "class_tag": self.class_tag.value,
            "lambda": self.lam,
            "orientation": self.orientation,
            "c": self.c,
            "d": self.d,
            "canonicalized": self.canonicalized,
            "matched": self.matched,
            "notes": list(self.notes),
        }


def classify_signs(lam: float, orientation: int, c: float, d: float) -> tuple[ClassTag, bool, bool, list[str]]:
    """Class tag from the signs of lam, lam*gamma, c and d.

    Returns (tag, canonicalized, matched, notes).  Sign patterns that the
    class table reaches only after a change of homoclinic pair or passing to
    the inverse map are reported as their canonical representative.
    """
    notes = []
    if orientation == 1 and lam > 0:
        if c < 0:
            return (ClassTag.CLASS1 if d < 0 else ClassTag.CLASS2), False, True, notes
        if d < 0:
            notes.append("d < 0 reduced to d > 0 through the inverse map")
        return ClassTag.H3_1, d < 0, True, notes
    if orientation == 1 and lam < 0:
        canon = d < 0
        if canon:
            notes.append("d < 0 reduced to d > 0 by the pair (T0(M+), M-)")
        return (ClassTag.H3_4 if c > 0 else ClassTag.H3_5), canon, True, notes
    if orientation == -1 and lam < 0:
        if d < 0:
            return (ClassTag.H3_2_1 if c > 0 else ClassTag.H3_2_2), False, True, notes
        return (ClassTag.H3_3_1 if c > 0 else ClassTag.H3_3_2), False, True, notes
    notes.append("lambda*gamma = -1 with lambda > 0 matches no cell of the class table")
    tag = ClassTag.H3_3_1 if c > 0 else ClassTag.H3_3_2
    return tag, False, False, notes


def compute_profile(model: ModelMap) -> TangencyProfile:
    co = model.coeffs
    ratio = co.c * co.x_plus / co.y_minus
    if ratio == 0.0:
        raise DomainError("c x+ = 0: tau is undefined")
    tau = math.log(abs(ratio)) / math.log(abs(model.lam))
    alpha = ratio - 1.0
    nu1 = -1 if co.b * co.c > 0 else 1
    s0 = compute_s0(co, nu1).value
    tag, canon, matched, notes = classify_signs(model.lam, model.saddle.orientation, co.c, co.d)
    return TangencyProfile(
        tau, alpha, alpha + 2.0, s0, nu1, tag, model.lam, model.saddle.orientation,
        co.c, co.d, canon, matched, tuple(notes),
    )


def inverse_profile_signs(lam: float, orientation: int, b: float, c: float, d: float):
    """(lam~, orientation, c~, d~) of the inverse map: lam~ = 1/gamma, c~ = 1/c, d~ = -d/(c b^2)."""
    gamma = orientation / lam
    return 1.0 / gamma, orientation, 1.0 / c, -d / (c * b * b)


def dual_class_tag(model: ModelMap) -> ClassTag:
    """Class tag of the inverse map (lam gamma = 1 only)."""
    if model.saddle.orientation != 1:
        raise UnsupportedClass("the inverse-map dictionary is used for lambda*gamma = 1 only")
    g = model.glob
    lam, o, c, d = inverse_profile_signs(model.lam, 1, g.b, g.c, g.d)
    return classify_signs(lam, o, c, d)[0]


# strips ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class StripBoxes:
    k: int
    sigma0: tuple[tuple[float, float], tuple[float, float]]  # ((x_lo, x_hi), (y_lo, y_hi))
    sigma1: tuple[tuple[float, float], tuple[float, float]]


def strip_geometry(model: ModelMap, k: int, delta: float | None = None) -> StripBoxes:
    """Bounding boxes of sigma_k^0 in Pi+ and sigma_k^1 in Pi-.

    ``delta`` is the half-width of Pi- in y (default eps_y).  Computed from the
    exact cross form at the corners, which is exact for linear saddles.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    g = model.glob
    ex = model.chart.eps_x
    dy = model.chart.eps_y if delta is None else delta
    xs = np.array([g.x_plus - ex, g.x_plus + ex, g.x_plus - ex, g.x_plus + ex])
    yks = np.array([g.y_minus - dy, g.y_minus - dy, g.y_minus + dy, g.y_minus + dy])
    xk, y0 = exact_cross(model.saddle, xs, yks, k)
    box0 = ((float(xs.min()), float(xs.max())), (float(y0.min()), float(y0.max())))
    box1 = ((float(xk.min()), float(xk.max())), (float(yks.min()), float(yks.max())))
    if max(abs(box0[1][0]), abs(box0[1][1])) > model.chart.eps_y:
        raise DomainError(f"sigma_{k}^0 does not fit in Pi+ (|y| <= eps_y); use larger k")
    if max(abs(box1[0][0]), abs(box1[0][1])) > model.chart.eps_x:
        raise DomainError(f"sigma_{k}^1 does not fit in Pi- (|x| <= eps_x); use larger k")
    return StripBoxes(k, box0, box1)


def default_k_bar(model: ModelMap, tau_dependent: bool = False) -> int:
    """Smallest k >= 4 for which strips fit the charts and the horseshoe legs
    crossing sigma_k^0 stay inside Pi+; with ``tau_dependent`` also
    |lam|^(k/2) < |{tau}| |ln|lam|| / 4."""
    g = model.glob
    lam = abs(model.lam)
    k = 4
    while k < 200:
        try:
            strip_geometry(model, k)
            fits = True
        except DomainError:
            fits = False
        reach = lam**k * (g.y_minus + model.chart.eps_y) + abs(g.c) * lam**k * (g.x_plus + model.chart.eps_x)
        eta = math.sqrt(2.0 * reach / abs(g.d))
        fits &= abs(g.b) * eta < 0.5 * model.chart.eps_x and eta < 0.5 * model.chart.eps_y
        if fits and tau_dependent:
            tau = compute_profile(model).tau
            frac = abs(tau - round(tau))
            fits = lam ** (k / 2) < frac * abs(math.log(lam)) / 4
        if fits:
            return k
        k += 1
    raise DomainError("no admissible k_bar below 200")


# strip intersection classifier -------------------------------------------------------------------


def lemma_margin(model: ModelMap, i: int, j: int) -> float:
    """d (gamma^-i y- - c lam^j x+)."""
    g = model.glob
    return g.d * (model.gamma ** (-i) * g.y_minus - g.c * model.lam**j * g.x_plus)


def lemma_width(model: ModelMap, i: int, j: int, k_bar: int) -> float:
    lam = abs(model.lam)
    return (lam**i + lam**j) * lam ** (k_bar / 2)


@dataclass(frozen=True)
class StripPair:
    i: int
    j: int
    strip_box: tuple[tuple[float, float], tuple[float, float]]
    horseshoe_samples: np.ndarray = field(repr=False)
    verdict: Verdict
    lemma_margin: float
    threshold: float


def horseshoe_polyline(model: ModelMap, j: int, n: int = 257) -> np.ndarray:
    """Image under T1 of the centre line x = lam^j x+ of sigma_j^1."""
    g = model.glob
    etas = np.linspace(-model.chart.eps_y, model.chart.eps_y, n)
    xj = model.lam**j * g.x_plus * np.ones_like(etas)
    xb, yb = g.apply((xj, g.y_minus + etas))
    return np.column_stack([xb, yb])


def intersection_classify(model: ModelMap, i: int, j: int, S1: float, k_bar: int) -> StripPair:
    """Verdict of the width inequalities for the horseshoe T1(sigma_j^1) and strip sigma_i^0."""
    if i < k_bar or j < k_bar:
        raise ValidationError(f"need i, j >= k_bar = {k_bar}")
    m = lemma_margin(model, i, j)
    thr = S1 * lemma_width(model, i, j, k_bar)
    if m > thr:
        v = Verdict.REGULAR
    elif m < -thr:
        v = Verdict.EMPTY
    else:
        v = Verdict.BORDERLINE
    try:
        box = strip_geometry(model, i).sigma0
    except DomainError:
        box = ((math.nan, math.nan), (math.nan, math.nan))
    return StripPair(i, j, box, horseshoe_polyline(model, j), v, m, thr)


# geometric oracle ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeometricResult:
    verdict: Verdict
    components: int
    saddle: bool
    stable: bool
    samples: int


def _eta_samples(model: ModelMap, i: int, j: int, n: int) -> np.ndarray:
    g = model.glob
    ey = model.chart.eps_y
    lam = abs(model.lam)
    reach = lam**i * (g.y_minus + ey) + abs(g.c) * lam**j * (g.x_plus + model.chart.eps_x)
    w = min(ey, 3.0 * math.sqrt(reach / abs(g.d)))
    return np.unique(np.concatenate([np.linspace(-ey, ey, n), np.linspace(-w, w, n)]))


def _in_strip_mask(model: ModelMap, i: int, j: int, etas: np.ndarray):
    """For each eta: does the image of {x in sigma_j^1, y = y- + eta} meet sigma_i^0?

    Also returns |d ybar / d eta| * |gamma|^i at each eta (expansion of T_i
    along y in the strip's own coordinate).
    """
    g = model.glob
    ex, ey = model.chart.eps_x, model.chart.eps_y
    s = model.saddle
    n = etas.size
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    xbar_ok = np.zeros(n, dtype=bool)
    for x0 in (g.x_plus - ex, g.x_plus + ex):
        xj, _ = exact_cross(s, np.full(n, x0), g.y_minus + etas, j, strict=False)
        xb, yb = g.apply((xj, g.y_minus + etas))
        _, yi = forward_cross(s, xb, yb, i, strict=False)
        yi = np.where(np.isfinite(yi), yi, np.nan)
        lo = np.fmin(lo, yi)
        hi = np.fmax(hi, yi)
        xbar_ok |= np.abs(xb - g.x_plus) <= ex
    hit = (hi >= g.y_minus - ey) & (lo <= g.y_minus + ey) & xbar_ok
    h = 1e-7
    xc, _ = exact_cross(s, np.full(n, g.x_plus), g.y_minus + etas, j, strict=False)
    _, yp = g.apply((xc, g.y_minus + etas + h))
    _, ym = g.apply((xc, g.y_minus + etas - h))
    expansion = np.abs(yp - ym) / (2 * h) * abs(model.gamma) ** i
    return hit, expansion


def _components(model: ModelMap, i: int, j: int, n: int) -> tuple[int, bool]:
    etas = _eta_samples(model, i, j, n)
    hit, expansion = _in_strip_mask(model, i, j, etas)
    runs = []
    start = None
    for t, h in enumerate(hit):
        if h and start is None:
            start = t
        if not h and start is not None:
            runs.append((start, t - 1))
            start = None
    if start is not None:
        runs.append((start, hit.size - 1))
    saddle = True
    for a, b in runs:
        # a saddle component stays off the fold line eta = 0 with strong expansion
        if etas[a] <= 0.0 <= etas[b] or np.min(expansion[a:b + 1]) < 2.0:
            saddle = False
    return len(runs), saddle


def geometric_intersection(model: ModelMap, i: int, j: int, n: int = COMPONENT_SAMPLES) -> GeometricResult:
    """Brute-force count of the components of T1(sigma_j^1) cap sigma_i^0.

    The sampling is refined by doubling until the component count is the
    same at two successive refinements.
    """
    counts = []
    res = n
    saddle = True
    for _ in range(6):
        cnt, saddle = _components(model, i, j, res)
        counts.append(cnt)
        if len(counts) >= 2 and counts[-1] == counts[-2]:
            break
        res *= 2
    stable = len(counts) >= 2 and counts[-1] == counts[-2]
    cnt = counts[-1]
    if not stable:
        v = Verdict.IRREGULAR
    elif cnt == 0:
        v = Verdict.EMPTY
    elif cnt == 2 and saddle:
        v = Verdict.REGULAR
    else:
        v = Verdict.IRREGULAR
    return GeometricResult(v, cnt, saddle, stable, res)


def required_S1(model: ModelMap, i: int, j: int, k_bar: int, geo: GeometricResult) -> float:
    """Smallest S1 for which the classifier does not contradict the oracle at (i, j)."""
    m = lemma_margin(model, i, j)
    w = lemma_width(model, i, j, k_bar)
    if geo.verdict == Verdict.REGULAR:
        return max(0.0, -m / w)
    if geo.verdict == Verdict.EMPTY:
        return max(0.0, m / w)
    return abs(m) / w


def calibrate_s1(model: ModelMap, k_bar: int, span: int = 8, safety: float = 1.01) -> float:
    """Smallest S1 giving no decided-verdict contradiction over i, j in [k_bar, k_bar + span]."""
    need = 0.0
    for i in range(k_bar, k_bar + span + 1):
        for j in range(k_bar, k_bar + span + 1):
            geo = geometric_intersection(model, i, j)
            need = max(need, required_S1(model, i, j, k_bar, geo))
    return need * safety if need > 0 else 1e-12


def contradicts(classified: Verdict, geo: Verdict) -> bool:
    """Regular vs Empty disagreement between the classifier and the oracle."""
    return {classified, geo} == {Verdict.REGULAR, Verdict.EMPTY}


# symbolic dynamics -----------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolCode:
    blocks: tuple[int, ...]
    symbols: tuple[int, ...] | None = None
    periodic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if not self.blocks:
            raise ValidationError("a code needs at least one block")
        if any(b < 2 for b in self.blocks):
            raise ValidationError("blocks must be >= 2 (no two adjacent nonzero symbols)")
        if self.symbols is not None:
            object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
            if len(self.symbols) != len(self.blocks) or any(s not in (1, 2) for s in self.symbols):
                raise ValidationError("one symbol in {1, 2} per block")

    @classmethod
    def parse(cls, text: str) -> "SymbolCode":
        try:
            return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))
        except ValueError as exc:
            raise ValidationError(f"malformed code {text!r}") from exc

    def to_sequence(self, symbols: tuple[int, ...] | None = None) -> list[int]:
        """Expanded sequence: each block is its symbol followed by k_s - 1 zeros.

        With every k_s >= 2 no two nonzero symbols are adjacent.
        """
        syms = symbols or self.symbols or (1,) * len(self.blocks)
        out = []
        for k, a in zip(self.blocks, syms):
            out.extend([a] + [0] * (k - 1))
        return out

    def pairs(self) -> list[tuple[int, int]]:
        """Adjacent (k_s, k_{s+1}) pairs, cyclic for periodic codes."""
        b = self.blocks
        n = len(b)
        if self.periodic:
            return [(b[s], b[(s + 1) % n]) for s in range(n)]
        return [(b[s], b[s + 1]) for s in range(n - 1)]


TAU_SENSITIVE = {
    ClassTag.H3_1, ClassTag.H3_2_1, ClassTag.H3_2_2, ClassTag.H3_3_1, ClassTag.H3_3_2,
    ClassTag.H3_4, ClassTag.H3_5,
}


def pair_regular_sign(profile: TangencyProfile, x_plus: float, y_minus: float, j: int, i: int) -> bool:
    """Limit (i, j -> infinity) form of the regular-intersection inequality:
    d (gamma^-i y- - c lam^j x+) > 0 with gamma = orientation / lam."""
    gamma = profile.orientation / profile.lam
    return profile.d * (gamma ** (-i) * y_minus - profile.c * profile.lam**j * x_plus) > 0


def admissible_code(profile: TangencyProfile, code: SymbolCode, k_bar: int,
                    x_plus: float = 1.0, y_minus: float | None = None) -> bool:
    """True iff every adjacent block pair (k_s, k_{s+1}) = (j, i) gives a regular
    intersection of T1(sigma_j^1) with sigma_i^0.

    Only the ratio c x+ / y- enters; it is recovered from tau when y- is not
    given.  Raises UnsupportedClass at integer tau for the tau-sensitive
    classes (borderline intersections) and for H3_4 near tau = 0.
    """
    if any(b < k_bar for b in code.blocks):
        raise ValidationError(f"blocks must be >= k_bar = {k_bar}")
    tag = profile.class_tag
    if tag == ClassTag.CLASS1:
        return False
    if tag == ClassTag.CLASS2:
        return True
    tol = abs(profile.lam) ** (k_bar / 2)
    if tag in TAU_SENSITIVE and abs(profile.tau - round(profile.tau)) < max(tol, TAU_TOL):
        raise UnsupportedClass(
            f"{tag.value} with tau = {profile.tau:.6g} near an integer has borderline intersections"
        )
    if y_minus is None:
        # c x+ / y- = sign(c) |lam|^tau
        y_minus = 1.0
        x_plus = abs(profile.lam) ** profile.tau / abs(profile.c)
    return all(pair_regular_sign(profile, x_plus, y_minus, j, i) for j, i in code.pairs())


def model_admissible(model: ModelMap, code: SymbolCode, k_bar: int) -> bool:
    prof = compute_profile(model)
    return admissible_code(prof, code, k_bar, model.glob.x_plus, model.glob.y_minus)


# interval certificate ---------------------------------------------------------------------


def _imul(a, b):
    p = np.stack([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    return p.min(axis=0), p.max(axis=0)


def _iscale(k, a):
    return (np.minimum(k * a[0], k * a[1]), np.maximum(k * a[0], k * a[1]))


def _iadd(*terms):
    return sum(t[0] for t in terms), sum(t[1] for t in terms)


def _isq(a):
    lo = np.where((a[0] <= 0) & (a[1] >= 0), 0.0, np.minimum(a[0] ** 2, a[1] ** 2))
    return lo, np.maximum(a[0] ** 2, a[1] ** 2)


def _icube(a):
    return a[0] ** 3, a[1] ** 3


def global_map_enclosure(model: ModelMap, x, e):
    """Interval enclosures of (xbar, ybar) over boxes x in [x0, x1], eta in [e0, e1] (arrays)."""
    co = model.coeffs
    x2, e2 = _isq(x), _isq(e)
    xe = _imul(x, e)
    ybar = _iadd(
        (np.full_like(x[0], co.mu), np.full_like(x[0], co.mu)),
        _iscale(co.c, x), _iscale(co.d, e2), _iscale(co.f20, x2), _iscale(co.f11, xe),
        _iscale(co.f30, _icube(x)), _iscale(co.f21, _imul(x2, e)), _iscale(co.f12, _imul(x, e2)),
        _iscale(co.f03, _icube(e)),
    )
    g = model.glob
    if getattr(g, "family", "") == "exact":
        shear = (ybar[0] - co.mu, ybar[1] - co.mu)
        xbar = _iadd((np.full_like(x[0], g.x_plus),) * 2, _iscale(g.b, e), _iscale(-g.sigma, shear))
    else:
        xbar = _iadd(
            (np.full_like(x[0], co.x_plus),) * 2, _iscale(co.a, x), _iscale(co.b, e),
            _iscale(co.e20, x2), _iscale(co.e11, xe), _iscale(co.e02, e2),
        )
    pad = 1e-12
    return ((xbar[0] - pad * (1 + np.abs(xbar[0])), xbar[1] + pad * (1 + np.abs(xbar[1]))),
            (ybar[0] - pad * (1 + np.abs(ybar[0])), ybar[1] + pad * (1 + np.abs(ybar[1]))))


def certify_empty(model: ModelMap, i: int, j: int, max_boxes: int = 200_000) -> bool:
    """Interval proof that T1(sigma_j^1) misses sigma_i^0.

    Both strips are replaced by their bounding boxes, so a True answer is a
    certificate; False only means no proof was found within the box budget.
    """
    try:
        src = strip_geometry(model, j).sigma1
        dst = strip_geometry(model, i).sigma0
    except DomainError:
        return False
    (xlo, xhi), (ylo, yhi) = src
    (txlo, txhi), (tylo, tyhi) = dst
    y_minus = model.glob.y_minus
    e = (np.array([ylo - y_minus]), np.array([yhi - y_minus]))
    x = (np.array([xlo]), np.array([xhi]))
    used = 0
    while e[0].size:
        used += e[0].size
        if used > max_boxes:
            return False
        (xb0, xb1), (yb0, yb1) = global_map_enclosure(model, x, e)
        alive = (xb1 >= txlo) & (xb0 <= txhi) & (yb1 >= tylo) & (yb0 <= tyhi)
        if not np.any(alive):
            return True
        x = (x[0][alive], x[1][alive])
        e0, e1 = e[0][alive], e[1][alive]
        mid = 0.5 * (e0 + e1)
        if np.any(mid == e0):
            return False
        e = (np.concatenate([e0, mid]), np.concatenate([mid, e1]))
        x = (np.concatenate([x[0], x[0]]), np.concatenate([x[1], x[1]]))
    return True


@dataclass
class CodeOrbitReport:
    code: SymbolCode
    status: str  # "found", "absent" or "inconclusive"
    certificate: str
    orbits: np.ndarray  # rows of stacked cross coordinates (x0_1, yk_1, ...)
    symbols: list[tuple[int, ...]]
    residuals: list[float]
    n_seeds: int
    n_converged: int
    n_exited: int
    n_diverged: int
    n_stagnated: int

    def to_dict(self) -> dict:
        return {
            "blocks": list(self.code.blocks),
            "status": self.status,
            "certificate": self.certificate,
            "orbits": self.orbits.tolist(),
            "symbols": [list(s) for s in self.symbols],
            "residuals": self.residuals,
            "n_seeds": self.n_seeds,
            "n_converged": self.n_converged,
            "n_exited": self.n_exited,
            "n_diverged": self.n_diverged,
            "n_stagnated": self.n_stagnated,
        }


def code_seeds(model: ModelMap, blocks, m: int = 16) -> np.ndarray:
    """Seeds for a block sequence: per block an eta grid covering Pi- plus a grid
    refined around the expected leg positions eta ~ +-sqrt(|gamma^-k| y- / |d|).

    The x-coordinate of each block is x+ + b eta of the previous block.
    """
    g = model.glob
    ey, ex = model.chart.eps_y, model.chart.eps_x
    grids = []
    for k in blocks:
        scale = math.sqrt(abs(model.gamma) ** (-k) * (g.y_minus + abs(g.c) * g.x_plus) / abs(g.d))
        fine = np.concatenate([np.linspace(0.2, 2.0, m // 2) * scale, -np.linspace(0.2, 2.0, m // 2) * scale])
        coarse = np.linspace(-ey, ey, m)
        grids.append(np.unique(np.clip(np.concatenate([coarse, fine]), -ey, ey)))
    mesh = np.meshgrid(*grids, indexing="ij")
    E = np.column_stack([G.ravel() for G in mesh])
    n = len(blocks)
    Z = np.empty((E.shape[0], 2 * n))
    for s in range(n):
        prev = E[:, (s - 1) % n]
        Z[:, 2 * s] = np.clip(g.x_plus + g.b * prev, g.x_plus - ex, g.x_plus + ex)
        Z[:, 2 * s + 1] = g.y_minus + E[:, s]
    return Z


def code_to_orbit(model: ModelMap, code: SymbolCode, m: int = 16, tol: float = 1e-12) -> CodeOrbitReport:
    """Periodic orbits following the block sequence of ``code`` (with either symbol per block).

    Multi-shooting Newton from a deterministic seed grid.  ``absent`` is a
    certificate that every seed diverged or left the neighbourhood;
    ``inconclusive`` means some seed stagnated inside it.
    """
    if not code.periodic:
        raise ValidationError("code_to_orbit needs a periodic code")
    if sum(code.blocks) > 40:
        raise ValidationError("total block length above 40 is outside the supported range")
    blocks = list(code.blocks)
    seeds = code_seeds(model, blocks, m)
    Z, rn, st = solve_orbits(model, blocks, seeds, tol=tol)
    g = model.glob
    inside = np.ones(Z.shape[0], dtype=bool)
    for s in range(len(blocks)):
        inside &= ReturnMap(model, blocks[s]).in_strip(Z[:, 2 * s], Z[:, 2 * s + 1])
    conv = (st == CONVERGED) & inside
    exited = (st == LEFT_CHART) | ((st == CONVERGED) & ~inside)
    stagnated = (st == STAGNATED) & inside
    orbits = dedupe_rows(Z[conv]) if np.any(conv) else np.zeros((0, 2 * len(blocks)))
    symbols = [tuple(1 if z[2 * s + 1] >= g.y_minus else 2 for s in range(len(blocks))) for z in orbits]
    residuals = []
    fun, _ = multishoot_residual(model, blocks)
    for z in orbits:
        residuals.append(float(np.max(np.abs(fun(z[None, :])))))
    certificate = ""
    if orbits.shape[0] > 0:
        status = "found"
    else:
        empty = [(j, i) for j, i in code.pairs() if certify_empty(model, i, j)]
        if empty:
            status = "absent"
            certificate = "T1(sigma_%d^1) misses sigma_%d^0 (interval bound)" % empty[0]
        elif not np.any(stagnated):
            status = "absent"
            certificate = "every seed diverged or left the neighbourhood"
        else:
            status = "inconclusive"
    return CodeOrbitReport(
        code, status, certificate, orbits, symbols, residuals, int(seeds.shape[0]), int(np.sum(conv)),
        int(np.sum(exited)), int(np.sum(st == DIVERGED)), int(np.sum(stagnated)),
    )
