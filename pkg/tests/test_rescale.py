from __future__ import annotations

import numpy as np
import pytest
from conftest import build_model
from hypothesis import given
from hypothesis import strategies as st

from apmlab.errors import ChartEscape, ValidationError
from apmlab.globalmap import GlobalMapCoeffs
from apmlab.henon import analyze_orientable
from apmlab.model import reference_model
from apmlab.rescale import (
    M_to_mu,
    compute_s0,
    henon_to_cross,
    model_s0,
    mu_to_M,
    nu_signs,
    rescale_chart,
    rescaled_Tk,
)
from apmlab.retmap import ReturnMap, find_fixed_point

EPS = np.finfo(float).eps


def _coeffs(**kw):
    base = dict(x_plus=1.0, y_minus=1.0, mu=0.0, a=0.0, b=-1.0, c=1.0, d=1.0)
    base.update(kw)
    return GlobalMapCoeffs(**base)


def test_s0_zero_when_quadratic_terms_vanish():
    assert compute_s0(_coeffs(), 1).value == 0.0
    assert compute_s0(_coeffs(), -1).value == 0.0


def test_s0_exact_family_example():
    m = build_model(0.5, 1, b=-1, c=1, d=1, sigma=1.0)
    co = m.coeffs
    assert (co.a, co.f20, co.f11) == (-1.0, 0.0, 0.0)
    assert compute_s0(co, 1).value == pytest.approx(-1.0, abs=1e-15)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 2), st.floats(-2, 2))
def test_s0_specializations(a, f20, f11, xp, d):
    co = _coeffs(a=a, f20=f20, f11=f11, x_plus=xp, d=d)
    base = d * xp * (a * co.c + f20 * xp)
    plus = base + f11 * xp * (1 - f11 * xp / 4)
    minus = base - (f11 * xp) ** 2 / 4
    assert compute_s0(co, 1).value == pytest.approx(plus, abs=1e-12)
    assert compute_s0(co, -1).value == pytest.approx(minus, abs=1e-12)


def test_s0_rejects_bad_nu1():
    with pytest.raises(ValidationError):
        compute_s0(_coeffs(), 0)


@pytest.mark.parametrize(
    "lam,orientation,b,c,expected",
    [
        (0.5, 1, -1.0, 1.0, {k: (1, 1) for k in range(1, 9)}),
        (0.5, 1, 1.0, 1.0, {k: (-1, 1) for k in range(1, 9)}),
        (-0.5, 1, -1.0, 1.0, {k: (1, 1) for k in range(1, 9)}),
        (-0.5, -1, -1.0, 1.0, {k: ((1, 1) if k % 2 == 0 else (-1, -1)) for k in range(1, 9)}),
    ],
)
def test_sign_dictionary(lam, orientation, b, c, expected):
    m = build_model(lam, orientation, b=b, c=c)
    for k, signs in expected.items():
        assert nu_signs(m, k) == signs
        lk_gk = (lam * m.gamma) ** k
        assert signs == (int(np.sign(-b * c * lk_gk)), int(np.sign(lk_gk)))


def test_mu_for_M_zero():
    m = reference_model(alpha=0.3, f03=0.0)
    g = m.glob
    alpha = g.c * g.x_plus / g.y_minus - 1
    for k in (4, 7, 10):
        s0 = model_s0(m, k)
        mu = -(m.lam**k) * g.y_minus * alpha - s0 * m.lam ** (2 * k) / g.d
        assert mu_to_M(m, k, mu) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("alpha", [0.0, 0.2, -0.4])
@pytest.mark.parametrize("k", [5, 8, 11])
def test_paper_parabolic_endpoints(alpha, k):
    # mu_k^+ and mu_k^- without the O(k lam^3k) tail
    m = reference_model(alpha=alpha)
    g = m.glob
    s0 = model_s0(m, k)
    head = -(m.lam**k) * g.y_minus * alpha
    mu_plus = head - (s0 - 1) * m.lam ** (2 * k) / g.d
    mu_minus = head - (s0 + 3) * m.lam ** (2 * k) / g.d
    assert mu_to_M(m, k, mu_plus) == pytest.approx(-1.0, abs=1e-8)
    assert mu_to_M(m, k, mu_minus) == pytest.approx(3.0, abs=1e-8)


def test_nonorientable_saddle_offset():
    m = build_model(-0.5, -1, b=-1 / 1.5, c=1.5, d=1.0)
    g = m.glob
    for k in (5, 6):
        mu = 1e-3
        expected = -g.d * m.lam ** (-2 * k) * (mu + g.c * m.lam**k * g.x_plus - m.gamma ** (-k) * g.y_minus)
        assert mu_to_M(m, k, mu) == pytest.approx(expected - model_s0(m, k), rel=1e-12)


def test_M_zero_at_zero_alpha_and_s0():
    m = build_model(0.5, 1, b=-1, c=1, d=1)
    assert model_s0(m, 6) == 0.0
    assert M_to_mu(m, 6, 0.0) == 0.0


@given(st.floats(-3, 5), st.integers(1, 20), st.floats(-0.5, 0.5))
def test_mu_M_round_trip(M, k, alpha):
    m = reference_model(alpha=alpha)
    assert mu_to_M(m, k, M_to_mu(m, k, M)) == pytest.approx(M, abs=1e-9 * max(1.0, abs(M)))


def test_k_must_be_positive():
    m = reference_model()
    with pytest.raises(ValidationError):
        mu_to_M(m, 0)
    with pytest.raises(ValidationError):
        M_to_mu(m, 0, 1.0)


def test_residual_sigma_zero():
    # the dropped corrections vanish; what is left is rounding amplified by gamma^k
    m = build_model(0.5, 1, b=-1, c=1, d=1)
    for k in range(6, 15):
        r = rescaled_Tk(m.with_mu(M_to_mu(m, k, 1.0)), k)
        floor = 64 * EPS * 0.5 ** (-k)
        assert r.residual_bound <= max(k * 0.5 ** (2 * k), floor)
        assert abs(r.xy_coeff) <= max(r.residual_bound, floor)


def test_residual_sigma_one_trend():
    m = build_model(0.5, 1, b=-1, c=1, d=1, sigma=1.0, f03=0.2)
    res = []
    for k in range(6, 15):
        r = rescaled_Tk(m.with_mu(M_to_mu(m, k, 1.0)), k)
        res.append(r.residual_bound)
        assert abs(r.xy_coeff) <= r.residual_bound
        assert r.cubic_coeff == pytest.approx(0.2 * 0.5**k)
    C = res[0] / (6 * 0.5**6)
    for k, v in zip(range(6, 15), res):
        assert v <= C * k * 0.5**k
    assert all(a > b for a, b in zip(res, res[1:]))


@pytest.mark.parametrize("lam,orientation,b", [(-0.5, -1, -1.0), (0.5, 1, 1.0), (-0.5, 1, -1.0)])
def test_residual_other_orientations(lam, orientation, b):
    m = build_model(lam, orientation, b=b, c=1, d=1, sigma=0.5, f03=0.1)
    prev = np.inf
    for k in (8, 10, 12):
        r = rescaled_Tk(m.with_mu(M_to_mu(m, k, 0.5)), k)
        assert r.residual_bound < prev
        assert r.residual_bound <= 2 * k * 0.5**k
        prev = r.residual_bound


def test_nu1_parity_flip():
    flips = build_model(-0.5, -1, b=-1, c=1)
    assert [nu_signs(flips, k)[0] for k in (4, 5, 6, 7)] == [1, -1, 1, -1]
    for m in (build_model(-0.5, 1, b=-1, c=1), build_model(0.5, 1, b=1, c=1)):
        assert len({nu_signs(m, k)[0] for k in range(4, 10)}) == 1


def test_fixed_points_converge_to_henon():
    m = build_model(0.5, 1, b=-1, c=1, d=1, sigma=1.0, f03=0.2)
    target = analyze_orientable(1.0).elliptic_points[0].point
    dists = []
    for k in range(6, 15):
        mk = m.with_mu(M_to_mu(m, k, 1.0))
        rm = ReturnMap(mk, k)
        seed = henon_to_cross(mk, k, *target)
        rec = find_fixed_point(rm, rm.to_real(*seed))
        x0, yk = rm.to_cross(*rec.point)
        X, Y = rescale_chart(mk, k).forward(x0, yk)
        dists.append(max(abs(X - target[0]), abs(Y - target[1])))
    C = dists[0] / (6 * 0.5**6)
    assert all(dd <= C * k * 0.5**k for k, dd in zip(range(6, 15), dists))
    assert dists[-1] < 1e-3


def test_chart_escape_names_bound():
    m = build_model(0.5, 1, b=-1, c=1, d=1)
    with pytest.raises(ChartEscape) as err:
        rescaled_Tk(m.with_mu(M_to_mu(m, 2, 1.0)), 2)
    assert err.value.bound in ("eps_x", "eps_y")
    assert "eps_" in str(err.value)
