from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest
from conftest import build_model
from hypothesis import given
from hypothesis import strategies as st

from apmlab.errors import DomainError, UnsupportedClass, ValidationError
from apmlab.globalmap import GlobalMapCoeffs
from apmlab.saddle import iterate_T0
from apmlab.semilocal import (
    ClassTag,
    SymbolCode,
    Verdict,
    admissible_code,
    calibrate_s1,
    certify_empty,
    classify_signs,
    code_to_orbit,
    compute_profile,
    contradicts,
    default_k_bar,
    dual_class_tag,
    geometric_intersection,
    intersection_classify,
    lemma_margin,
    model_admissible,
    strip_geometry,
)


def h31(tau, **kw):
    """H3_1 model with c x+ / y- = lam^tau."""
    return build_model(0.5, 1, b=-1, c=1, d=1, x_plus=0.5**tau, **kw)


# profile ---------------------------------------------------------------------------------


@given(
    st.floats(0.2, 0.8),
    st.sampled_from([1, -1]),
    st.floats(0.3, 3.0),
    st.sampled_from([1.0, -1.0]),
    st.floats(0.3, 3.0),
    st.floats(0.3, 3.0),
)
def test_tau_alpha_identity(lam, orient, c, csign, xp, ym):
    lam = -lam if orient == -1 else lam
    c *= csign
    b = -1 / c if orient == -1 else 1 / c
    m = build_model(lam, orient, b=b, c=c, x_plus=xp, y_minus=ym)
    p = compute_profile(m)
    assert abs(abs(lam) ** p.tau - abs(p.alpha + 1)) < 1e-12 * max(1.0, abs(p.alpha + 1))
    assert p.alpha_tilde == p.alpha + 2


def test_profile_zero_tau():
    p = compute_profile(build_model(0.5, 1, b=-0.5, c=2, x_plus=0.5, y_minus=1))
    assert p.tau == 0.0 and p.alpha == 0.0


def test_profile_tau_two():
    p = compute_profile(build_model(0.5, 1, b=-1, c=1, x_plus=0.25, y_minus=1))
    assert p.tau == pytest.approx(2.0, abs=1e-14)


def test_profile_h331_example():
    p = compute_profile(build_model(-0.5, -1, b=-1, c=1, d=1))
    assert p.class_tag is ClassTag.H3_3_1 and p.matched


def test_profile_undefined_tau():
    co = GlobalMapCoeffs(1.0, 1.0, 0.0, 0.0, -1.0, 0.0, 1.0)
    fake = SimpleNamespace(coeffs=co, lam=0.5, saddle=SimpleNamespace(orientation=1))
    with pytest.raises(DomainError):
        compute_profile(fake)


@pytest.mark.parametrize(
    "lam,orient,c,d,tag,canon",
    [
        (0.5, 1, -1, -1, ClassTag.CLASS1, False),
        (0.5, 1, -1, 1, ClassTag.CLASS2, False),
        (0.5, 1, 1, 1, ClassTag.H3_1, False),
        (0.5, 1, 1, -1, ClassTag.H3_1, True),
        (-0.5, 1, 1, 1, ClassTag.H3_4, False),
        (-0.5, 1, -1, 1, ClassTag.H3_5, False),
        (-0.5, -1, 1, -1, ClassTag.H3_2_1, False),
        (-0.5, -1, -1, -1, ClassTag.H3_2_2, False),
        (-0.5, -1, 1, 1, ClassTag.H3_3_1, False),
        (-0.5, -1, -1, 1, ClassTag.H3_3_2, False),
    ],
)
def test_class_table(lam, orient, c, d, tag, canon):
    got, canonicalized, matched, _ = classify_signs(lam, orient, c, d)
    assert (got, canonicalized, matched) == (tag, canon, True)


def test_unmatched_signs_flagged():
    _, _, matched, notes = classify_signs(0.5, -1, 1, 1)
    assert not matched and notes


def test_nu1_and_s0_in_profile():
    p = compute_profile(build_model(0.5, 1, b=-1, c=1, d=1, sigma=1.0))
    assert p.nu1 == 1 and p.s0 == pytest.approx(-1.0)
    assert compute_profile(build_model(0.5, 1, b=1, c=1)).nu1 == -1
    assert set(p.to_dict()) >= {"tau", "alpha", "alpha_tilde", "s0", "nu1", "class_tag"}


@pytest.mark.parametrize(
    "c,d,tag",
    [(1, -1, ClassTag.H3_1), (1, 1, ClassTag.H3_1), (-1, 1, ClassTag.CLASS2), (-1, -1, ClassTag.CLASS1)],
)
def test_inverse_map_duality(c, d, tag):
    m = build_model(0.5, 1, b=-1 / c, c=c, d=d)
    assert compute_profile(m).class_tag is tag
    assert dual_class_tag(m) is tag


def test_duality_needs_orientable_saddle():
    with pytest.raises(UnsupportedClass):
        dual_class_tag(build_model(-0.5, -1, b=-1, c=1))


# strips ----------------------------------------------------------------------------------


def test_strip_example():
    m = build_model(0.5, 1)
    box = strip_geometry(m, 3, delta=0.1)
    assert box.sigma0[1] == pytest.approx((0.1125, 0.1375), abs=1e-15)
    assert box.sigma1[0] == pytest.approx((0.125 * 0.75, 0.125 * 1.25), abs=1e-15)


@pytest.mark.parametrize("betas", [(), (0.3,), (0.3, -0.2)])
def test_strip_maps_onto_strip(betas, rng):
    m = build_model(0.5, 1, betas=betas)
    k = 6
    box = strip_geometry(m, k)
    (x0, x1), (y0, y1) = box.sigma0
    for x, y in zip(rng.uniform(x0, x1, 50), rng.uniform(y0, y1, 50)):
        xk, yk = iterate_T0(m.saddle, (x, y), k)
        (a0, a1), (b0, b1) = box.sigma1
        # the bounding box of sigma_k^0 is slightly wider than the strip, so allow its overhang
        slack = 1e-3 if betas else 1e-12
        assert a0 - slack <= xk <= a1 + slack
        assert b0 - 0.2 <= yk <= b1 + 0.2
    # corners are exact for the linear saddle
    if not betas:
        xk, yk = iterate_T0(m.saddle, (x0, y0), k)
        assert (xk, yk) == pytest.approx((box.sigma1[0][0], box.sigma1[1][0]), abs=1e-14)


def test_strips_disjoint():
    m = build_model(0.5, 1)
    boxes = [strip_geometry(m, k).sigma0[1] for k in range(4, 13)]
    for a, b in zip(boxes, boxes[1:]):
        assert b[1] < a[0]


def test_strip_chart_errors():
    m = build_model(0.5, 1)
    with pytest.raises(DomainError):
        strip_geometry(m, 1)
    with pytest.raises(ValidationError):
        strip_geometry(m, 0)


# intersection verdicts ----------------------------------------------------------------------------------


def test_class2_all_regular():
    m = build_model(0.5, 1, b=1, c=-1, d=1, sigma=0.3, f03=0.1)
    kb = default_k_bar(m)
    S1 = calibrate_s1(m, kb, span=4)
    for i in range(kb, kb + 5):
        for j in range(kb, kb + 5):
            assert intersection_classify(m, i, j, S1, kb).verdict is Verdict.REGULAR
            assert geometric_intersection(m, i, j).verdict is Verdict.REGULAR


@pytest.mark.parametrize("tau,verdict", [(-0.7, Verdict.EMPTY), (0.5, Verdict.REGULAR)])
def test_h31_self_pairs(tau, verdict):
    m = h31(tau, eps=0.1)
    kb = default_k_bar(m, tau_dependent=True)
    S1 = calibrate_s1(m, kb, span=4)
    for i in range(kb, kb + 6):
        assert intersection_classify(m, i, i, S1, kb).verdict is verdict
        assert geometric_intersection(m, i, i).verdict is verdict


def test_tangent_configuration_irregular():
    # tau = 0 and i = j: the line y = gamma^-i y- touches the parabola
    m = h31(0.0, eps=0.1)
    for i in (10, 12):
        assert lemma_margin(m, i, i) == pytest.approx(0.0, abs=1e-18)
        assert geometric_intersection(m, i, i).verdict is Verdict.IRREGULAR
        assert intersection_classify(m, i, i, 1.0, 10).verdict is Verdict.BORDERLINE


def test_wide_margin_two_components():
    m = h31(0.5, eps=0.1)
    geo = geometric_intersection(m, 12, 12)
    assert geo.components == 2 and geo.saddle and geo.stable


def test_classifier_requires_k_bar():
    with pytest.raises(ValidationError):
        intersection_classify(h31(0.5), 3, 10, 1.0, 5)


def test_contradiction_predicate():
    assert contradicts(Verdict.REGULAR, Verdict.EMPTY)
    assert not contradicts(Verdict.BORDERLINE, Verdict.EMPTY)
    assert not contradicts(Verdict.REGULAR, Verdict.IRREGULAR)


# symbolic codes ----------------------------------------------------------------------------


def test_code_parsing_and_sequence():
    code = SymbolCode.parse("8, 10")
    assert code.blocks == (8, 10)
    seq = code.to_sequence((1, 2))
    assert seq == [1] + [0] * 7 + [2] + [0] * 9
    assert all(not (a and b) for a, b in zip(seq, seq[1:] + seq[:1]))
    assert code.pairs() == [(8, 10), (10, 8)]
    with pytest.raises(ValidationError):
        SymbolCode.parse("8,x")
    with pytest.raises(ValidationError):
        SymbolCode((1, 5))
    with pytest.raises(ValidationError):
        SymbolCode((5, 6), symbols=(1, 3))


def test_class2_every_code_admissible():
    p = compute_profile(build_model(0.5, 1, b=1, c=-1, d=1))
    for blocks in [(9,), (9, 12), (12, 9, 10)]:
        assert admissible_code(p, SymbolCode(blocks), 9)


def test_h31_admissibility_examples():
    p = compute_profile(h31(0.5))
    assert admissible_code(p, SymbolCode((10, 10)), 8)
    assert not admissible_code(p, SymbolCode((9, 11)), 8)


@pytest.mark.parametrize("blocks", [(12,), (11, 12), (11, 13, 14)])
def test_h331_even_blocks_inadmissible(blocks):
    m = build_model(-0.5, -1, b=-1, c=1, d=1, x_plus=0.5**-3.5)
    assert not model_admissible(m, SymbolCode(blocks), 11)


def test_h331_odd_blocks_admissible():
    m = build_model(-0.5, -1, b=-1, c=1, d=1, x_plus=0.5**-3.5)
    assert model_admissible(m, SymbolCode((11, 13)), 11)


@pytest.mark.parametrize("tau", [0.0, 1.0, -2.0])
def test_integer_tau_unsupported(tau):
    with pytest.raises(UnsupportedClass):
        admissible_code(compute_profile(h31(tau)), SymbolCode((10, 10)), 8)


def test_h34_near_zero_tau_unsupported():
    m = build_model(-0.5, 1, b=-1, c=1, d=1)
    with pytest.raises(UnsupportedClass):
        model_admissible(m, SymbolCode((10,)), 8)


def test_blocks_below_k_bar_rejected():
    with pytest.raises(ValidationError):
        admissible_code(compute_profile(h31(0.5)), SymbolCode((5, 10)), 8)


def test_class1_never_admissible_and_absent():
    m = build_model(0.5, 1, b=1, c=-1, d=-1, sigma=0.3)
    kb = default_k_bar(m)
    for blocks in [(kb,), (kb + 1,), (kb, kb + 2)]:
        code = SymbolCode(blocks)
        assert not model_admissible(m, code, kb)
        rep = code_to_orbit(m, code)
        assert rep.status == "absent" and rep.orbits.shape[0] == 0


def test_class2_single_block_orbits():
    m = build_model(0.5, 1, b=1, c=-1, d=1, sigma=0.3, f03=0.1)
    rep = code_to_orbit(m, SymbolCode((9,)))
    assert rep.status == "found"
    assert sorted(rep.symbols) == [(1,), (2,)]
    assert max(rep.residuals) < 1e-10


def test_h31_inadmissible_pair_absent():
    m = h31(0.5, eps=0.1)
    rep = code_to_orbit(m, SymbolCode((12, 14)))
    assert rep.status == "absent"
    assert "interval bound" in rep.certificate
    assert certify_empty(m, 14, 12)


def test_h31_admissible_pair_found():
    m = h31(0.5, eps=0.1)
    rep = code_to_orbit(m, SymbolCode((12, 12)))
    assert rep.status == "found" and len(rep.symbols) == 4


def test_certificate_never_claims_regular_pairs():
    m = build_model(0.5, 1, b=1, c=-1, d=1, sigma=0.3)
    assert not certify_empty(m, 10, 10)


def test_code_length_limit():
    with pytest.raises(ValidationError):
        code_to_orbit(h31(0.5), SymbolCode((21, 21)))


def test_k_bar_tau_bound():
    m = h31(0.5, eps=0.1)
    kb = default_k_bar(m, tau_dependent=True)
    assert 0.5 ** (kb / 2) < 0.5 * math.log(2) / 4
    assert default_k_bar(m) <= kb


def test_report_serializes():
    m = build_model(0.5, 1, b=1, c=-1, d=1)
    d = code_to_orbit(m, SymbolCode((9,))).to_dict()
    assert d["status"] == "found" and np.asarray(d["orbits"]).shape[1] == 2
