"""First-return maps T_k = T1 o T0^k, periodic-point location and classification.

Newton iterations run in cross coordinates (x0, y_k): a point of the strip
sigma_k^0 is labelled by its x-coordinate and by the y-coordinate of its k-th
T0-iterate.  Strips are O(|lambda|^k) thin in the original y, while y_k is
O(1), so the conditioning is uniform in k.  Differentials and multipliers are
always taken from direct iteration in the original coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChartEscape, ConvergenceError
from .model import ModelMap
from .saddle import exact_cross, forward_cross, iterate_T0_with_jacobian
from .stability import (
    FIXED_POINT_RESONANCES,
    TWO_CYCLE_RESONANCES,
    Stability,
    classify_multipliers,
)

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
DEDUP_TOL = 1e-8
FD_STEP = 1e-7

CONVERGED, DIVERGED, LEFT_CHART, STAGNATED = 0, 1, 2, 3


@dataclass(frozen=True)
class FixedPointRecord:
    point: tuple[float, float]
    period: int
    trace: float
    det: float
    stability: Stability
    rotation: float | None
    cycle: tuple[tuple[float, float], ...] = ()
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "period": self.period,
            "trace": self.trace,
            "det": self.det,
            "stability": self.stability.value,
            "rotation": self.rotation,
            "cycle": [list(p) for p in self.cycle],
            "residual": self.residual,
        }


@dataclass(frozen=True)
class ReturnMap:
    model: ModelMap
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")

    # coordinates ---------------------------------------------------------
    def to_cross(self, x0, y0, strict: bool = True):
        _, yk = forward_cross(self.model.saddle, x0, y0, self.k, strict)
        return np.asarray(x0, dtype=float), yk

    def to_real(self, x0, yk, strict: bool = True):
        _, y0 = exact_cross(self.model.saddle, x0, yk, self.k, strict)
        return np.asarray(x0, dtype=float), y0

    def cross_image(self, x0, yk, k_next: int | None = None, strict: bool = False):
        """T_k in cross coordinates; the image is labelled with block length k_next."""
        xk, _ = exact_cross(self.model.saddle, x0, yk, self.k, strict)
        xb, yb = self.model.glob.apply((xk, yk))
        kn = self.k if k_next is None else k_next
        _, ykn = forward_cross(self.model.saddle, xb, yb, kn, strict)
        return np.asarray(xb, dtype=float), ykn

    def in_strip(self, x0, yk, slack: float = 1.0):
        ch = self.model.chart
        g = self.model.glob
        return (np.abs(np.asarray(x0) - g.x_plus) <= slack * ch.eps_x) & (
            np.abs(np.asarray(yk) - g.y_minus) <= slack * ch.eps_y
        )


def eval_Tk(rm: ReturnMap, p, check: bool = True):
    """Image of p under T_k and the chain-rule differential.

    With ``check`` the T0-orbit must stay in the saddle chart and land in Pi-;
    otherwise ChartEscape reports the exit step.
    """
    m = rm.model
    box = m.chart_box() if check else None
    (xk, yk), J0 = iterate_T0_with_jacobian(m.saddle, p, rm.k, box)
    if check and (abs(xk) > m.chart.eps_x or abs(yk - m.glob.y_minus) > m.chart.eps_y):
        raise ChartEscape(f"T0^{rm.k} image misses Pi-", rm.k, "Pi-")
    img = m.glob.apply((xk, yk))
    J = m.glob.jacobian((xk, yk)) @ J0
    return (float(img[0]), float(img[1])), J


def orbit_jacobian(model: ModelMap, ks, point, check: bool = True):
    """Differential of T_{k_n} o ... o T_{k_1} at a real point, and the visited points."""
    p = (float(point[0]), float(point[1]))
    J = np.eye(2)
    pts = [p]
    for k in ks:
        p, Jk = eval_Tk(ReturnMap(model, k), p, check)
        J = Jk @ J
        pts.append(p)
    return J, pts


# batched Newton --------------------------------------------------------------


def newton_batch(fun, Z0, inside, tol: float = NEWTON_TOL, maxit: int = NEWTON_MAXIT,
                 max_step: float | None = None):
    """Vectorized Newton with forward-difference Jacobians.

    ``fun`` maps an (N, m) array to (N, m) residuals (NaN where undefined);
    ``inside`` maps (N, m) to a boolean mask of admissible states.  Returns the
    final states, the residual norms and a status code per row.
    """
    Z = np.array(Z0, dtype=float, copy=True)
    N, m = Z.shape
    status = np.full(N, STAGNATED)
    active = np.ones(N, dtype=bool)
    rnorm = np.full(N, np.inf)
    for _ in range(maxit + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Za = Z[idx]
        R = fun(Za)
        rn = np.max(np.abs(R), axis=1)
        rnorm[idx] = rn
        bad = ~np.isfinite(rn)
        done = (rn < tol) & ~bad
        status[idx[bad]] = DIVERGED
        status[idx[done]] = CONVERGED
        active[idx[bad | done]] = False
        keep = ~(bad | done)
        idx, Za, R = idx[keep], Za[keep], R[keep]
        if idx.size == 0:
            break
        J = np.empty((idx.size, m, m))
        for j in range(m):
            h = FD_STEP * np.maximum(1.0, np.abs(Za[:, j]))
            Zp = Za.copy()
            Zp[:, j] += h
            J[:, :, j] = (fun(Zp) - R) / h[:, None]
        step = np.full_like(Za, np.nan)
        ok = np.all(np.isfinite(J), axis=(1, 2))
        if np.any(ok):
            try:
                step[ok] = np.linalg.solve(J[ok], -R[ok][:, :, None])[:, :, 0]
            except np.linalg.LinAlgError:
                for t in np.flatnonzero(ok):
                    try:
                        step[t] = np.linalg.solve(J[t], -R[t])
                    except np.linalg.LinAlgError:
                        pass
        if max_step is not None:
            sn = np.max(np.abs(step), axis=1)
            scale = np.where(sn > max_step, max_step / np.where(sn > 0, sn, 1.0), 1.0)
            step = step * scale[:, None]
        Znew = Za + step
        fin = np.all(np.isfinite(Znew), axis=1)
        ins = np.zeros(idx.size, dtype=bool)
        ins[fin] = inside(Znew[fin])
        status[idx[~fin]] = DIVERGED
        status[idx[fin & ~ins]] = LEFT_CHART
        active[idx[~(fin & ins)]] = False
        Z[idx] = np.where((fin & ins)[:, None], Znew, Za)
    return Z, rnorm, status


def multishoot_residual(model: ModelMap, ks):
    """Residual of the periodic block sequence ks for states Z = (x0_1, yk_1, ..., x0_n, yk_n)."""
    n = len(ks)
    maps = [ReturnMap(model, k) for k in ks]

    def fun(Z):
        R = np.empty_like(Z)
        for s in range(n):
            t = (s + 1) % n
            xb, ykb = maps[s].cross_image(Z[:, 2 * s], Z[:, 2 * s + 1], ks[t])
            R[:, 2 * s] = xb - Z[:, 2 * t]
            R[:, 2 * s + 1] = ykb - Z[:, 2 * t + 1]
        return R

    def inside(Z):
        ok = np.ones(Z.shape[0], dtype=bool)
        for s in range(n):
            ok &= maps[s].in_strip(Z[:, 2 * s], Z[:, 2 * s + 1], slack=2.0)
        return ok

    return fun, inside


def solve_orbits(model: ModelMap, ks, seeds, tol: float = NEWTON_TOL):
    """Run multi-shooting Newton from all seeds; returns (states, residuals, status)."""
    fun, inside = multishoot_residual(model, ks)
    step_cap = 0.5 * min(model.chart.eps_x, model.chart.eps_y)
    return newton_batch(fun, seeds, inside, tol=tol, max_step=step_cap)


def dedupe_rows(Z, tol: float = DEDUP_TOL) -> np.ndarray:
    """Distinct rows (max-norm distance > tol), in lexicographic order."""
    out: list[np.ndarray] = []
    for z in Z[np.lexsort(Z.T[::-1])]:
        if not any(np.max(np.abs(z - w)) <= tol for w in out):
            out.append(z)
    return np.array(out).reshape(len(out), Z.shape[1])


# seeds ----------------------------------------------------------------------------


def seed_grid(rm: ReturnMap, n: int = 32) -> list[tuple[float, float]]:
    """Deterministic n x n grid over sigma_k^0 in real coordinates.

    The x-range is x+ +- eps_x; the y-range is the strip band, i.e. the points
    whose k-th iterate has y in y- +- eps_y.
    """
    g = rm.model.glob
    ch = rm.model.chart
    xs = np.linspace(g.x_plus - ch.eps_x, g.x_plus + ch.eps_x, n)
    yks = np.linspace(g.y_minus - ch.eps_y, g.y_minus + ch.eps_y, n)
    X, YK = np.meshgrid(xs, yks, indexing="ij")
    x0, y0 = rm.to_real(X.ravel(), YK.ravel(), strict=False)
    return [(float(a), float(b)) for a, b in zip(x0, y0) if np.isfinite(b)]


def cross_grid(model: ModelMap, n: int = 32) -> np.ndarray:
    g = model.glob
    ch = model.chart
    xs = np.linspace(g.x_plus - ch.eps_x, g.x_plus + ch.eps_x, n)
    yks = np.linspace(g.y_minus - ch.eps_y, g.y_minus + ch.eps_y, n)
    X, YK = np.meshgrid(xs, yks, indexing="ij")
    return np.column_stack([X.ravel(), YK.ravel()])


def chain_seeds(model: ModelMap, n_blocks: int, m: int = 24) -> np.ndarray:
    """Seeds for n-block orbits: product grid in eta_s = y_k - y- with x from x+ + b eta.

    Uses that T1 sends (x_k, y- + eta) close to x+ + b eta when x_k is small.
    """
    g = model.glob
    ch = model.chart
    etas = np.linspace(-ch.eps_y, ch.eps_y, m)
    grids = np.meshgrid(*([etas] * n_blocks), indexing="ij")
    E = np.column_stack([G.ravel() for G in grids])
    Z = np.empty((E.shape[0], 2 * n_blocks))
    for s in range(n_blocks):
        prev = E[:, (s - 1) % n_blocks]
        Z[:, 2 * s] = np.clip(g.x_plus + g.b * prev, g.x_plus - ch.eps_x, g.x_plus + ch.eps_x)
        Z[:, 2 * s + 1] = g.y_minus + E[:, s]
    return Z


# records ----------------------------------------------------------------------------


def _record(model: ModelMap, k: int, cross_pts, period: int, residual: float) -> FixedPointRecord:
    rm = ReturnMap(model, k)
    pts = []
    for x0, yk in cross_pts:
        x, y = rm.to_real(x0, yk)
        pts.append((float(x), float(y)))
    order = sorted(range(len(pts)), key=lambda i: pts[i])
    pts = [pts[i] for i in order]
    J, _ = orbit_jacobian(model, [k] * period, pts[0])
    tr = float(np.trace(J))
    det = float(np.linalg.det(J))
    res = FIXED_POINT_RESONANCES if period == 1 else TWO_CYCLE_RESONANCES
    stab, psi = classify_multipliers(tr, det, res)
    return FixedPointRecord(pts[0], period, tr, det, stab, psi, tuple(pts), residual)


def find_fixed_point(rm: ReturnMap, seed) -> FixedPointRecord:
    """Newton from a real seed point to a fixed point of T_k."""
    x0, yk = rm.to_cross(seed[0], seed[1], strict=False)
    Z, rn, st = solve_orbits(rm.model, [rm.k], np.array([[float(x0), float(yk)]]))
    if st[0] != CONVERGED:
        reason = {DIVERGED: "diverged", LEFT_CHART: "left the strip chart", STAGNATED: "stagnated"}[int(st[0])]
        raise ConvergenceError(f"fixed-point Newton {reason} (k={rm.k})", reason)
    if not rm.in_strip(Z[0, 0], Z[0, 1]):
        raise ConvergenceError("Newton converged outside the sigma_k^0 chart", "outside chart")
    return _record(rm.model, rm.k, [(Z[0, 0], Z[0, 1])], 1, float(rn[0]))


def find_period2(rm: ReturnMap, seed) -> FixedPointRecord:
    """Newton on (z1, z2) with T_k(z1) = z2, T_k(z2) = z1, seeded from a real point.

    The second seed point is the image of the first (or the pair may be given
    as ((x1, y1), (x2, y2))).
    """
    if np.ndim(seed) == 2:
        (a, b), (c, d) = seed
        z1 = rm.to_cross(a, b, strict=False)
        z2 = rm.to_cross(c, d, strict=False)
    else:
        z1 = rm.to_cross(seed[0], seed[1], strict=False)
        z2 = rm.cross_image(z1[0], z1[1])
    Z0 = np.array([[float(z1[0]), float(z1[1]), float(z2[0]), float(z2[1])]])
    Z, rn, st = solve_orbits(rm.model, [rm.k, rm.k], Z0)
    if st[0] != CONVERGED:
        reason = {DIVERGED: "diverged", LEFT_CHART: "left the strip chart", STAGNATED: "stagnated"}[int(st[0])]
        raise ConvergenceError(f"2-cycle Newton {reason} (k={rm.k})", reason)
    z = Z[0]
    if not (rm.in_strip(z[0], z[1]) and rm.in_strip(z[2], z[3])):
        raise ConvergenceError("Newton converged outside the sigma_k^0 chart", "outside chart")
    if np.max(np.abs(z[:2] - z[2:])) <= DEDUP_TOL:
        raise ConvergenceError("2-cycle Newton collapsed onto a fixed point", "fixed point")
    return _record(rm.model, rm.k, [(z[0], z[1]), (z[2], z[3])], 2, float(rn[0]))


@dataclass
class SearchReport:
    """Result of an exhaustive seeded search for periodic points."""

    k: int
    period: int
    points: np.ndarray  # distinct converged states, rows in cross coordinates
    n_seeds: int
    n_converged: int
    n_stagnated_inside: int
    records: list[FixedPointRecord] = field(default_factory=list)


def search_periodic(rm: ReturnMap, period: int = 1, n: int = 32, m: int = 24) -> SearchReport:
    """All points with T_k^period(z) = z found from the deterministic seed grids.

    Period 1 uses the n x n strip grid; higher periods use the eta product grid.
    Returned states are distinct as tuples (z_1, ..., z_p).
    """
    model = rm.model
    if period == 1:
        seeds = cross_grid(model, n)
    else:
        seeds = chain_seeds(model, period, m)
    Z, rn, st = solve_orbits(model, [rm.k] * period, seeds)
    conv = st == CONVERGED
    good = Z[conv]
    ok = np.ones(good.shape[0], dtype=bool)
    for s in range(period):
        ok &= rm.in_strip(good[:, 2 * s], good[:, 2 * s + 1])
    pts = dedupe_rows(good[ok]) if np.any(ok) else np.zeros((0, 2 * period))
    stag = int(np.sum((st == STAGNATED) & rm.in_strip(Z[:, 0], Z[:, 1])))
    report = SearchReport(rm.k, period, pts, len(seeds), int(np.sum(conv)), stag)
    return report


def find_all_fixed_points(rm: ReturnMap, n: int = 32) -> list[FixedPointRecord]:
    rep = search_periodic(rm, 1, n)
    return [_record(rm.model, rm.k, [(z[0], z[1])], 1, 0.0) for z in rep.points]
