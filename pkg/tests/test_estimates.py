from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpscatter.estimates import (
    EstimateCase,
    Inequality,
    Slot,
    besov_any_q,
    builtin_cases,
    check_conditions,
    first_invalid_sigma,
    exponent_parameters,
    quadratic_cubic_ratio_suite,
    random_triple,
    spread_profile,
    trilinear_ratio,
    trilinear_suite,
    verification_lines,
)
from gpscatter.grid import Grid, plane_wave


def case(name, d, sigma):
    return dict((c.name, (c, r)) for c, r in builtin_cases(d, sigma))[name]


def test_parameters():
    p4 = exponent_parameters(4)
    assert (p4.s, p4.b, p4.p, p4.q, p4.sigma_max) == (1, Fr(1, 4), 4, Fr(8, 3), Fr(1, 4))
    assert exponent_parameters(5).sigma_max == Fr(4, 5)
    p6 = exponent_parameters(6)
    assert (p6.s, p6.b) == (2, Fr(1, 3))
    with pytest.raises(ValueError):
        exponent_parameters(3)


def test_inequality_exact():
    i = Inequality("x", Fr(1, 3), Fr(1, 3))
    assert i.holds and i.slack == 0
    assert not Inequality("x", Fr(1, 3), Fr(1, 3), strict=True).holds


def test_case_examples():
    assert case("(2)", 4, 0)[1].valid
    assert case("(4)", 4, Fr(1, 2))[1].valid
    c, rep = case("(1)", 4, 2)
    assert not rep.valid and rep.failed()


def test_all_cases_valid():
    assert all(rep.valid for _, rep in builtin_cases(4, 0))
    assert all(rep.valid for _, rep in builtin_cases(5, Fr(1, 2)))
    for j, k in ((1, 0), (0, 1)):
        assert all(rep.valid for _, rep in builtin_cases(4, 0, j, k))
    with pytest.raises(ValueError):
        builtin_cases(4, 0, 1, 1)


@pytest.mark.parametrize("d", [4, 5, 6])
def test_all_cases_valid_at_sigma_range_ends(d):
    sm = exponent_parameters(d).sigma_max
    for sg in (-sm, Fr(0), sm):
        assert all(rep.valid for _, rep in builtin_cases(d, sg)), (d, sg)


@settings(max_examples=60, deadline=None)
@given(d=st.sampled_from([4, 5, 6]), num=st.integers(-400, 400))
def test_builtin_agrees_with_verification_lines(d, num):
    sg = Fr(num, 100)
    lines = verification_lines(d, sg)
    for c, rep in builtin_cases(d, sg):
        expect = all(i.holds for i in lines[c.name])
        if c.name == "(4)" and sg == -(Fr(d, 2) - 1):
            continue  # the simplified line omits the strict slot condition at this endpoint
        assert rep.valid == expect, (d, sg, c.name, rep.failed())


def test_first_invalid_sigma():
    sm = exponent_parameters(4).sigma_max
    got = first_invalid_sigma(4, "(1)")
    assert got == sm + Fr(1, 100)
    assert case("(1)", 4, sm)[1].valid


def test_custom_case_report():
    c = EstimateCase("bad", 4, (Slot(Fr(2), Fr(5), Fr(1)), Slot(Fr(2), Fr(0), Fr(1)), Slot(Fr(2), Fr(0), Fr(1))))
    rep = check_conditions(c)
    assert not rep.valid and "s1 < d b1" in rep.failed()
    assert rep.to_json()["valid"] is False


def test_besov_any_q_matches_for_q_two():
    from gpscatter.besov import NormSpec, besov_coeffs_norm

    g = Grid(2, 16, 10.0)
    rng = np.random.default_rng(1)
    c = rng.standard_normal(g.shape) * (g.kmag < 2)
    c[0, 0] = 0
    assert besov_any_q(g, c, 0.5, 1.0, 2.0) == pytest.approx(besov_coeffs_norm(g, c, NormSpec(0.5, 1.0, 2.0)), rel=1e-13)
    # below q = 2 the norm grows (the lattice box has finite measure)
    assert besov_any_q(g, c, 0.0, 0.0, 1.0) >= besov_any_q(g, c, 0.0, 0.0, 2.0) / np.sqrt(g.volume)


def test_trilinear_disjoint_support_is_zero():
    g = Grid(4, 8, 4 * np.pi)
    c4, _ = case("(4)", 4, 0)
    f = plane_wave(g, (1, 0, 0, 0))
    h = plane_wave(g, (1, 0, 0, 0))
    assert trilinear_ratio(f, f, h, c4) < 1e-15


def test_trilinear_single_block_matches_direct():
    g = Grid(4, 8, 4 * np.pi)
    c4, _ = case("(4)", 4, 0)
    f = plane_wave(g, (1, 0, 0, 0))
    h = plane_wave(g, (-2, 0, 0, 0))
    r = trilinear_ratio(f, f, h, c4)
    integral = g.volume
    den = 1.0
    for fld, (s, t, p) in zip((f, f, h), c4.norm_specs()):
        den *= besov_any_q(g, fld.coefficients(), s, t, p)
    assert r == pytest.approx(integral / den, rel=1e-12)
    assert 0 < r < np.inf


def test_trilinear_rejects_invalid_case():
    g = Grid(4, 8, 4 * np.pi)
    c1, _ = case("(1)", 4, 2)
    f = plane_wave(g, (1, 0, 0, 0))
    with pytest.raises(ValueError):
        trilinear_ratio(f, f, f, c1)


def test_spread_profile_band():
    g = Grid(4, 16, 4 * np.pi)
    prof = spread_profile(g, 2)(g.kmag)
    kept = g.kmag[prof > 0]
    assert kept.max() / kept.min() <= 4 + 1e-12
    rng = np.random.default_rng(0)
    f, gg, h = random_triple(g, 2, rng, aligned=True)
    assert np.sum(f.values * gg.values * h.values).real > 0


def test_trilinear_suite_small():
    g = Grid(4, 8, 2 * np.pi)
    st_ = trilinear_suite(g, trials=4, spreads=(1, 2))
    assert len(st_.rows()) == 10
    assert all(np.isfinite(r) for _, _, r in st_.rows())


def test_quadratic_cubic_suite():
    with pytest.raises(ValueError):
        quadratic_cubic_ratio_suite(trials=0)
    rep = quadratic_cubic_ratio_suite(trials=10, N=8, L=4 * np.pi, samples=5)
    for n in ("quadratic", "cubic", "gradient"):
        assert 0 < rep.max(n) < np.inf
    again = quadratic_cubic_ratio_suite(trials=10, N=8, L=4 * np.pi, samples=5)
    assert again.to_json() == rep.to_json()


def test_quadratic_suite_stable_under_horizon_doubling():
    a = quadratic_cubic_ratio_suite(trials=10, N=8, L=4 * np.pi, T=2.0, samples=5)
    b = quadratic_cubic_ratio_suite(trials=10, N=8, L=4 * np.pi, T=4.0, samples=9)
    for n in ("quadratic", "cubic", "gradient"):
        assert 0.25 < b.max(n) / a.max(n) < 4
