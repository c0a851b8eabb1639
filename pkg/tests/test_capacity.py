"""Closed-form regions, the correlation fixed point, outer bounds and leakage."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbgmac import capacity as cap
from fbgmac.model import ChannelParams, DomainError

UNIT = ChannelParams(1.0, 1.0, 1.0)
FIG8 = ChannelParams(1.0, 1.2, 0.1, 3.0)
FIG10 = ChannelParams(10.0, 3.0, 10.0, 20.0, 5.0)
FIG13 = ChannelParams(1.0, 1.5, 0.1, 1.2)

# [DERIVED] 40-digit mpmath root of the fixed-point equation and the per-user rates
RHO_STAR = {
    "unit": (UNIT, 0.31110781746598189993, 0.46421810856172593281, 0.46421810856172593281),
    "fig8": (FIG8, 0.72297419049123784003, 1.2646710084534062168, 1.3750566700513019197),
    "fig10": (FIG10, 0.20291220522587479022, 0.48499485984139311091, 0.18236912633958159971),
}


def _poly_oracle(p):
    """Real root in [0,1) of the fixed point, written as a quartic and solved by numpy.roots."""
    p1, p2, s = p.p1, p.p2, p.sigma1_sq
    c = math.sqrt(p1 * p2)
    # (s + p1(1-x^2))(s + p2(1-x^2)) - s(s + p1 + p2 + 2 c x) = 0
    a, b = s + p1, s + p2
    coeffs = [p1 * p2, 0.0, -(a * p2 + b * p1), -2.0 * s * c, a * b - s * (s + p1 + p2)]
    roots = np.roots(coeffs)
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and -1e-12 <= r.real < 1]
    assert len(real) == 1
    return real[0]


@pytest.mark.parametrize("name", sorted(RHO_STAR))
def test_rho_star_frozen_values(name):
    params, rho, r1, r2 = RHO_STAR[name]
    got = cap.solve_rho_star(params)
    assert got == pytest.approx(rho, abs=1e-12)
    pair = cap.ozarow_rate_pair(params)
    assert pair.r1 == pytest.approx(r1, abs=1e-12)
    assert pair.r2 == pytest.approx(r2, abs=1e-12)


def test_rho_star_unit_example():
    rho = cap.solve_rho_star(UNIT)
    assert 0.30 < rho < 0.32
    assert (2 - rho**2) ** 2 == pytest.approx(3 + 2 * rho, abs=1e-12)
    # the sum-rate constraint of the feedback region at the fixed point
    assert 0.5 * math.log2(3 + 2 * rho) == pytest.approx(0.92843621712345186561, abs=1e-12)


def test_rho_star_single_user_is_zero():
    assert cap.solve_rho_star(ChannelParams(1.0, 0.0, 1.0)) == 0.0


@settings(max_examples=150, deadline=None)
@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100))
def test_rho_star_matches_polynomial_oracle_and_residual(p1, p2, s):
    params = ChannelParams(p1, p2, s)
    rho = cap.solve_rho_star(params)
    assert 0 <= rho < 1
    assert rho == pytest.approx(_poly_oracle(params), abs=1e-7)
    diff, rhs = cap.rho_star_residual(params, rho)
    assert abs(diff) <= 1e-10 * abs(rhs)


def test_rho_star_requires_power():
    with pytest.raises(DomainError):
        cap.solve_rho_star(ChannelParams(0.0, 1.0, 1.0))


def test_gmac_examples():
    seg = cap.region_gmac(ChannelParams(1.0, 0.0, 1.0))
    assert seg.max_r1 == pytest.approx(0.5, abs=1e-15)
    assert seg.max_r2 == 0.0
    r = cap.region_gmac(UNIT)
    assert r.max_sum == pytest.approx(0.79248125036057809073, abs=1e-12)


def test_gmac_inside_feedback_region():
    for params in (UNIT, FIG8, FIG10, FIG13):
        assert cap.region_subset(cap.region_gmac(params), cap.region_gmac_feedback(params)) == []


def test_feedback_region_endpoints():
    fb = cap.region_gmac_feedback(UNIT)
    rho0 = fb.caps[0]
    np.testing.assert_allclose(rho0, cap.region_gmac(UNIT).caps[0], rtol=0, atol=1e-15)
    assert fb.caps[-1][0] == 0.0 and fb.caps[-1][1] == 0.0
    above = cap.RatePair(0.5 + 1e-6, 0.0)
    assert not cap.region_contains(fb, above)


def test_feedback_region_contains_ozarow_pair():
    for params in (UNIT, FIG8, FIG10):
        pair = cap.ozarow_rate_pair(params)
        fb = cap.region_gmac_feedback(params, rho_grid_size=2001)
        assert cap.region_contains(fb, pair, tol=1e-3)
        assert not cap.region_contains(fb, cap.RatePair(pair.r1 * 1.05, pair.r2 * 1.05))


@pytest.mark.parametrize("rho", [0.0, 0.25, 0.5, 0.9, 1.0])
def test_dms_corner_identity(rho):
    for params in (UNIT, FIG13, FIG10):
        c = cap.dms_corner(params, rho)
        total = 0.5 * math.log2(1 + (params.p1 + params.p2 + 2 * math.sqrt(params.p1 * params.p2) * rho)
                                / params.sigma1_sq)
        assert c.total == pytest.approx(total, abs=1e-14)


def test_dms_corner_examples():
    c = cap.dms_corner(UNIT, 0.5)
    assert c.r1 == pytest.approx(0.59632253897119794628, abs=1e-14)
    assert c.r2 == pytest.approx(0.40367746102880205372, abs=1e-14)
    assert c.total == pytest.approx(1.0, abs=1e-14)
    assert cap.dms_power_split(UNIT, 0.5) == pytest.approx((2.25, 1.75), abs=1e-15)
    c0 = cap.dms_corner(FIG13, 0.0)
    assert c0.r1 == pytest.approx(0.5 * math.log2(1 + 1.0 / 1.6), abs=1e-14)
    assert c0.r2 == pytest.approx(0.5 * math.log2(1 + 15.0), abs=1e-14)
    with pytest.raises(DomainError):
        cap.dms_corner(UNIT, 1.5)


def test_dms_region_examples():
    reg = cap.region_gmac_dms(UNIT)
    assert reg.max_r1 == pytest.approx(0.5 * math.log2(1 + 4.0), abs=1e-12)
    for rho in np.linspace(0, 1, 11):
        assert cap.region_contains(reg, cap.dms_corner(UNIT, rho), tol=1e-9)
    for params in (UNIT, FIG13, FIG10):
        assert cap.region_subset(cap.region_gmac_feedback(params), cap.region_gmac_dms(params)) == []


def test_outer_gmac_wt_examples():
    r = cap.outer_gmac_wt(FIG8)
    expected = 0.5 * math.log2(23) - 0.5 * math.log2(5.3 / 3.1)
    assert r.caps[0, 2] == pytest.approx(expected, abs=1e-12)
    assert r.caps[0, 2] == pytest.approx(1.8749189059403444509, abs=1e-12)
    assert r.max_sum <= expected + 1e-12
    assert cap.region_subset(r, cap.region_gmac(FIG8)) == []
    degraded = cap.outer_gmac_wt(ChannelParams(1.0, 1.2, 0.1, 0.0), grid=5)
    assert np.all(degraded.caps[:, 2] == 0.0)


def test_outer_gmac_dms_examples():
    inner = cap.outer_gmac_dms(FIG13)
    full = cap.region_gmac_dms(FIG13)
    assert cap.region_subset(inner, full) == []
    assert inner.max_sum < full.max_sum - 0.1
    assert inner.caps[0, 1] == 0.0  # rho = -1
    # 401 points on [-1, 1] put the same rho values on [0, 1] as the 201-point DMS sweep
    far = cap.outer_gmac_dms(ChannelParams(1.0, 1.5, 0.1, 1e9), grid=401)
    near = cap.region_gmac_dms(ChannelParams(1.0, 1.5, 0.1, 1e9), rho_grid_size=201)
    np.testing.assert_allclose(far.caps[200:, 1:], near.caps[:, 1:], rtol=0, atol=1e-6)
    a = far.boundary_array()
    b = near.boundary_array()
    assert a.shape == b.shape
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-6)


def test_ncsit_outer_bound():
    with pytest.raises(DomainError):
        cap.outer_ncsit_dms(FIG13)
    # zero correlations: the two evaluations of the private-rate bound
    zero = [0.0]
    res = cap.outer_ncsit_dms_caps(FIG10, zero, zero, zero, r2_form="residual")
    stmt = cap.outer_ncsit_dms_caps(FIG10, zero, zero, zero, r2_form="statement")
    assert res[0, 1] == pytest.approx(0.5 * math.log2(1 + 3.0 / 10.0), abs=1e-14)
    assert stmt[0, 1] == pytest.approx(0.5 * math.log2(1 + (3.0 + 10.0) / 10.0), abs=1e-14)
    a, b = cap.mmse_coefficients(FIG10, 0.0, 0.0, 0.0)
    assert a == 0.0 and b == 0.0
    with pytest.raises(DomainError):
        cap.outer_ncsit_dms_caps(FIG10, zero, zero, zero, r2_form="bogus")
    reg = cap.outer_ncsit_dms(FIG10)
    assert np.all(np.abs(reg.aux[:, 1]) < 1)
    assert cap.region_subset(reg, cap.region_gmac_dms(FIG10)) == []


def test_mmse_coefficients_minimise_residual():
    """The weights give the smallest residual variance among perturbed choices."""
    p = FIG10
    r12, r1s, r2s = 0.3, -0.2, 0.4
    cov = np.array([[p.p1, r12 * math.sqrt(p.p1 * p.p2), r1s * math.sqrt(p.p1 * p.q)],
                    [r12 * math.sqrt(p.p1 * p.p2), p.p2, r2s * math.sqrt(p.p2 * p.q)],
                    [r1s * math.sqrt(p.p1 * p.q), r2s * math.sqrt(p.p2 * p.q), p.q]])
    a, b = cap.mmse_coefficients(p, r12, r1s, r2s)
    sol = np.linalg.solve(cov[np.ix_([0, 2], [0, 2])], cov[[0, 2], 1])
    assert (float(a), float(b)) == pytest.approx(tuple(sol), abs=1e-12)


def test_leakage_examples():
    assert cap.leakage_bound(ChannelParams(0.0, 0.0, 1.0, 1.0), 7) == 0.0
    val = cap.leakage_bound(FIG8, 100)
    assert val == pytest.approx((math.log2(4 / 3) + math.log2(1.4)) / 200, abs=1e-15)
    assert val == pytest.approx(0.0045023216322454278906, abs=1e-15)
    assert cap.leakage_bound(FIG8, 200) == pytest.approx(val / 2, rel=1e-15)
    with pytest.raises(DomainError):
        cap.leakage_bound(ChannelParams(1.0, 1.0, 1.0, 0.0), 10)
    with pytest.raises(DomainError):
        cap.leakage_bound(FIG8, 0)


def test_region_contains_basics():
    for kind in cap.REGION_KINDS:
        params = FIG10 if kind == "outer_ncsit_dms" else FIG8
        reg = cap.regions_for_preset(params, [kind], grid3=9, rho_grid=21)[kind]
        assert cap.region_contains(reg, cap.RatePair(0.0, 0.0))
    with pytest.raises(DomainError):
        cap.region_contains(cap.region_gmac(UNIT), cap.RatePair(0, 0), tol=-1)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(1.0, 4.0))
def test_regions_grow_with_power(p1, p2, s, factor):
    small = ChannelParams(p1, p2, s)
    big = ChannelParams(p1 * factor, p2 * factor, s)
    assert cap.region_subset(cap.region_gmac_feedback(small, 41), cap.region_gmac_feedback(big, 41)) == []
    assert cap.region_subset(cap.region_gmac_dms(small, 41), cap.region_gmac_dms(big, 41)) == []


def test_grid_validation():
    with pytest.raises(DomainError):
        cap.region_gmac_feedback(UNIT, 1)
    with pytest.raises(DomainError):
        cap.outer_gmac_wt(FIG8, grid=1)
    with pytest.raises(DomainError):
        cap.regions_for_preset(UNIT, ["nope"])


def test_csv_output():
    text = cap.region_gmac(UNIT, trace_points=5).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "r1,r2"
    pts = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert pts[0, 0] == 0.0 and pts[-1, 1] == 0.0
    assert np.all(np.diff(pts[:, 0]) >= 0) and np.all(np.diff(pts[:, 1]) <= 0)


def test_rates_match_mpmath_direct_evaluation():
    mp.mp.dps = 40
    rho = mp.findroot(lambda x: (2 - x**2) ** 2 - (3 + 2 * x), 0.31)
    assert float(rho) == pytest.approx(cap.solve_rho_star(UNIT), abs=1e-15)
    r = mp.log(1 + (1 - rho**2)) / (2 * mp.log(2))
    assert float(r) == pytest.approx(cap.ozarow_rate_pair(UNIT).r1, abs=1e-15)
