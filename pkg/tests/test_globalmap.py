from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from apmlab.errors import ValidationError
from apmlab.globalmap import ExactGlobalMap, GlobalMapCoeffs, JetGlobalMap, apply_T1, taylor_of_T1, validate_coeffs
from apmlab.jets import Jet2
from apmlab.model import load_model, model_from_dict, model_to_dict, reference_model, save_model


def fd_jac(g, x, y, h=1e-3):
    def d(e):
        f = lambda t: np.array(g.apply((x + t * e[0], y + t * e[1])), dtype=float)
        return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)

    return np.column_stack([d((1, 0)), d((0, 1))])


def test_apply_example():
    g = ExactGlobalMap(1.0, 1.0, 0.1, -1.0, 1.0, 1.0, 0.0, 0.0)
    assert apply_T1(g, (0.2, 1.3)) == pytest.approx((0.7, 0.39), abs=1e-15)


@pytest.mark.parametrize("sigma,f03", [(0.0, 0.0), (1.0, 0.2), (-0.7, -0.5)])
def test_homoclinic_point_and_tangency(sigma, f03):
    g = ExactGlobalMap(1.3, 0.8, 0.0, 2.0, -0.5, -1.5, sigma, f03)
    assert apply_T1(g, (0.0, 0.8)) == (1.3, 0.0)
    assert g.jacobian((0.0, 0.8))[1, 1] == 0.0


@pytest.mark.parametrize("b,c", [(-1.0, 1.0), (1.0, 1.0), (-0.5, 2.0), (4.0, 0.25)])
def test_jacobian_is_minus_bc(b, c, rng):
    g = ExactGlobalMap(1.0, 1.2, 0.05, b, c, 0.8, 0.9, 0.3)
    pts = rng.uniform([-0.3, 0.9], [0.3, 1.5], size=(100, 2))
    dets = np.array([np.linalg.det(fd_jac(g, x, y)) for x, y in pts])
    assert np.max(np.abs(dets + b * c)) < 1e-10
    assert np.linalg.det(g.jacobian(pts[0])) == pytest.approx(-b * c, abs=1e-14)


def test_taylor_sigma_zero():
    t = taylor_of_T1(ExactGlobalMap(1.0, 1.0, 0.0, -1.0, 1.0, 1.0, 0.0, 0.3))
    assert (t.a, t.e20, t.e11, t.e02, t.f20, t.f11) == (0.0,) * 6
    assert t.f03 == 0.3


def test_taylor_sigma_one_example():
    t = taylor_of_T1(ExactGlobalMap(1.0, 1.0, 0.0, -1.0, 1.0, 1.0, 1.0, 0.0))
    assert (t.a, t.e02, t.f20, t.f11) == (-1.0, -1.0, 0.0, 0.0)
    assert t.R == 0.0


def _symbolic_taylor(g):
    x, e = sp.symbols("x e")
    G = g.mu + g.c * x + g.d * e**2 + g.f03 * e**3
    xb = g.x_plus + g.b * e - g.sigma * (G - g.mu)
    at = lambda f, i, j: float(sp.diff(f, x, i, e, j).subs({x: 0, e: 0}) / (sp.factorial(i) * sp.factorial(j)))
    return {
        "a": at(xb, 1, 0), "b": at(xb, 0, 1), "e20": at(xb, 2, 0), "e11": at(xb, 1, 1), "e02": at(xb, 0, 2),
        "c": at(G, 1, 0), "d": at(G, 0, 2), "f20": at(G, 2, 0), "f11": at(G, 1, 1),
        "f30": at(G, 3, 0), "f21": at(G, 2, 1), "f12": at(G, 1, 2), "f03": at(G, 0, 3),
    }


def _jet_taylor(g):
    D = 3
    x = Jet2.var(0, D)
    e = Jet2.var(1, D)
    G = x * g.c + e * e * g.d + e * e * e * g.f03
    xb = e * g.b - G * g.sigma
    return {
        "a": xb.coef(1, 0), "b": xb.coef(0, 1), "e20": xb.coef(2, 0), "e11": xb.coef(1, 1),
        "e02": xb.coef(0, 2), "c": G.coef(1, 0), "d": G.coef(0, 2), "f20": G.coef(2, 0), "f11": G.coef(1, 1),
        "f30": G.coef(3, 0), "f21": G.coef(2, 1), "f12": G.coef(1, 2), "f03": G.coef(0, 3),
    }


@pytest.mark.parametrize("params", [
    (1.0, 1.0, 0.0, -1.0, 1.0, 1.0, 1.0, 0.2),
    (0.7, 1.4, 0.01, 2.0, 0.5, -0.8, -0.4, 0.6),
    (1.2, 0.9, 0.0, -0.25, -4.0, 1.7, 2.5, -1.0),
])
def test_taylor_agrees_with_symbolic_and_jet_oracles(params):
    g = ExactGlobalMap(*params)
    t = dataclasses.asdict(taylor_of_T1(g))
    for oracle in (_symbolic_taylor(g), _jet_taylor(g)):
        for key, val in oracle.items():
            assert t[key] == pytest.approx(val, abs=1e-12), key


def test_validate_examples():
    ok = GlobalMapCoeffs(1.0, 1.0, 0.0, 0.0, -0.5, 2.0, 1.0)
    assert validate_coeffs(ok).ok
    bad = GlobalMapCoeffs(1.0, 1.0, 0.0, a=1.0, b=-1.0, c=1.0, d=1.0, f11=0.0, e02=0.0)
    diag = validate_coeffs(bad)
    assert not diag.ok and diag.R == pytest.approx(2.0)
    assert any("R" in msg for msg in diag.issues)
    assert not validate_coeffs(GlobalMapCoeffs(1.0, 1.0, 0.0, 0.0, -0.5, 3.0, 1.0)).ok


@given(st.floats(0.2, 3), st.floats(0.2, 3), st.floats(-1, 1), st.floats(0.25, 4), st.sampled_from([-1, 1]),
       st.floats(-3, 3).filter(lambda v: abs(v) > 0.05), st.floats(-3, 3), st.floats(-1, 1))
def test_family_always_valid(xp, ym, mu, absc, bc, d, sigma, f03):
    g = ExactGlobalMap(xp, ym, mu, bc / absc, absc, d, sigma, f03)
    assert validate_coeffs(taylor_of_T1(g)).ok


def test_jet_family_matches_exact_quadratic_part():
    g = ExactGlobalMap(1.1, 0.9, 0.02, -2.0, 0.5, 1.3, 0.8, 0.0)
    j = JetGlobalMap(taylor_of_T1(g))
    pts = np.array([[0.05, 0.95], [-0.1, 0.85], [0.02, 1.1]])
    for x, y in pts:
        assert j.apply((x, y)) == pytest.approx(g.apply((x, y)), abs=1e-14)
        assert np.allclose(j.jacobian((x, y)), g.jacobian((x, y)), atol=1e-14)


def test_tangency_offset_is_mu():
    g = ExactGlobalMap(1.0, 1.0, 0.03, -1.0, 1.0, 2.0, 0.5, 0.0)
    ys = np.linspace(0.8, 1.2, 401)
    yb = g.G(0.0, ys)
    assert yb.min() == pytest.approx(0.03, abs=1e-15)
    assert np.allclose(yb - 0.03, 2.0 * (ys - 1.0) ** 2, atol=1e-15)


def test_exact_family_validation():
    with pytest.raises(ValidationError):
        ExactGlobalMap(1.0, 1.0, 0.0, 2.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        ExactGlobalMap(1.0, 1.0, 0.0, -1.0, 1.0, 0.0)
    with pytest.raises(ValidationError):
        ExactGlobalMap(-1.0, 1.0, 0.0, -1.0, 1.0, 1.0)


def test_model_json_round_trip(tmp_path):
    m = reference_model(alpha=0.2)
    path = tmp_path / "m.json"
    save_model(m, path)
    assert load_model(path) == m
    assert model_from_dict(json.loads(json.dumps(model_to_dict(m)))) == m
    assert m.chart.eps_x == pytest.approx(0.25)


def test_model_json_errors(tmp_path):
    with pytest.raises(ValidationError):
        model_from_dict({"saddle": {"lambda": 0.5}})
    with pytest.raises(ValidationError):
        model_from_dict({"saddle": {"lambda": 0.5}, "global": {"family": "nope"}})
    bad_jet = {"saddle": {"lambda": 0.5}, "global": {"family": "jet", "x_plus": 1, "y_minus": 1, "a": 1,
                                                     "b": -1, "c": 1, "d": 1}}
    with pytest.raises(ValidationError):
        model_from_dict(bad_jet)
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ValidationError):
        load_model(p)


def test_nonorientable_model_requires_bc_minus_one():
    from conftest import build_model

    with pytest.raises(ValidationError):
        build_model(lam=-0.5, orientation=-1, b=1.0, c=1.0)
