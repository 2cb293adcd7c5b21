import numpy as np
import pytest

from gpscatter.besov import hs_norm
from gpscatter.grid import Grid, SpectralField, ifft
from gpscatter.multipliers import P, Q, U_inv, ZeroModeState, apply_array
from gpscatter.normal_form import (
    SmallnessViolated,
    apply_M,
    compute_G,
    invert_M,
    invert_M_array,
    nonlinearity_F,
    q_split,
    singular_and_regular_forcing,
    to_normal_form,
    w_identity_residual,
)

from conftest import mean_zero, smooth_field


def low_field(grid, seed, top, amplitude, imag_only=False):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c *= grid.kmag <= top
    u = ifft(grid, c)
    if imag_only:
        u = 1j * u.imag
    return SpectralField(grid, u * amplitude / np.max(np.abs(u)))


def test_F_examples():
    g = Grid(1, 8, 1.0)
    assert np.all(nonlinearity_F(SpectralField(g, np.zeros(8, complex))).values == 0)
    c = 0.3
    assert np.allclose(nonlinearity_F(SpectralField(g, np.full(8, c, complex))).values, 3 * c * c + c**3)
    e = 1e-2
    out = nonlinearity_F(SpectralField(g, np.full(8, 1j * e)))
    assert np.allclose(out.values, e * e + 1j * e**3, rtol=1e-14)


def test_G_zero_and_imaginary_low_support():
    g = Grid(2, 32, 40.0)
    z = compute_G(SpectralField(g, np.zeros(g.shape, complex)))
    assert not np.any(z.G1) and not np.any(z.G2)
    u = low_field(g, 1, 0.25, 0.1, imag_only=True)
    u2 = u.values.imag
    terms = compute_G(u)
    # Q u2^2 vanishes, so only the pieces built from u1 = 0 remain: G1 = P Lap |u|^2 / 2
    assert np.max(np.abs(apply_array(Q, g, u2 * u2))) < 1e-15
    from gpscatter.multipliers import P_LAPLACIAN

    assert np.allclose(terms.G1, apply_array(P_LAPLACIAN, g, u2 * u2) / 2, atol=1e-16)


def test_G_real_valued():
    g = Grid(2, 32, 20.0)
    t = compute_G(smooth_field(g, 3, amplitude=0.1))
    assert np.isrealobj(t.G1) or np.max(np.abs(np.imag(t.G1))) < 1e-16
    assert np.isrealobj(t.G2) or np.max(np.abs(np.imag(t.G2))) < 1e-16


def test_q_split_sum_and_examples():
    g = Grid(2, 32, 20.0)
    f = smooth_field(g, 5, amplitude=0.1, rule="1/2").values.real
    a, b = q_split(SpectralField(g, f, real=True))
    assert np.max(np.abs(a.values + b.values - apply_array(Q, g, f * f))) <= 1e-12 * np.max(np.abs(f)) ** 2
    low = low_field(Grid(1, 32, 40.0), 0, 0.5, 1.0).values.real
    a, b = q_split(SpectralField(Grid(1, 32, 40.0), low, real=True))
    assert np.max(np.abs(a.values)) < 1e-15 and np.max(np.abs(b.values)) < 1e-15


def test_q_split_single_high_mode():
    g = Grid(1, 32, 2 * np.pi)
    x = g.x[0]
    a, b = q_split(SpectralField(g, np.cos(4 * x), real=True))
    assert np.allclose(a.values, np.cos(8 * x) / 2, atol=1e-14)
    assert np.max(np.abs(b.values)) < 1e-14


def test_normal_form_examples():
    g = Grid(1, 32, 2 * np.pi)
    x = g.x[0]
    zero = SpectralField(g, np.zeros(32, complex))
    assert not np.any(to_normal_form(zero).values)
    wave = SpectralField(g, 0.3 * np.exp(4j * x))
    assert np.allclose(to_normal_form(wave).values, wave.values + 0.09 / 2, atol=1e-15)
    g2 = Grid(1, 64, 80.0)
    bump = low_field(g2, 2, 0.25, 0.1)
    bump = SpectralField(g2, bump.values.real + 0j)
    assert np.allclose(to_normal_form(bump).values, bump.values + np.abs(bump.values) ** 2 / 2, atol=1e-15)


def test_M_examples():
    g = Grid(2, 32, 30.0)
    zero = SpectralField(g, np.zeros(g.shape, complex))
    assert not np.any(apply_M(zero).values)
    gr = low_field(g, 4, 1.0, 0.05).values.real
    gr = gr - gr.mean()
    z = apply_M(SpectralField(g, 1j * gr))
    expect = 1j * gr + apply_array(U_inv, g, apply_array(P, g, gr * gr)) / 2
    assert np.allclose(z.values, expect, atol=1e-15)


def test_M_quadratic_scaling():
    g = Grid(2, 32, 30.0)
    base = mean_zero(smooth_field(g, 6, rule="1/2"))
    consts = []
    for n in (0.01, 0.05, 0.1):
        v = base * (n / hs_norm(g, base.values, 0, 0))
        d = hs_norm(g, apply_M(v).values - v.values, 0, 0)
        consts.append(d / n**2)
    assert max(consts) / min(consts) < 1.01


def test_M_norm_equivalence():
    g = Grid(2, 32, 30.0)
    for seed in range(5):
        base = mean_zero(smooth_field(g, seed, rule="1/2"))
        v = base * (0.1 / hs_norm(g, base.values, 0, 0))
        r = hs_norm(g, apply_M(v).values, 0, 0) / 0.1
        assert 0.5 <= r <= 2


def test_invert_M():
    g = Grid(2, 32, 30.0)
    v0, rep = invert_M(SpectralField(g, np.zeros(g.shape, complex)))
    assert rep.iterations == 1 and not np.any(v0.values)
    base = mean_zero(smooth_field(g, 8, rule="1/2"))
    v = base * (0.05 / hs_norm(g, base.values, 0, 0))
    back, rep = invert_M(apply_M(v))
    assert hs_norm(g, back.values - v.values, 0, 0) <= 1e-10
    z = apply_M(v)
    assert hs_norm(g, apply_M(back).values - z.values, 0, 0) <= 10 * 1e-11


def test_invert_M_contraction_ratio_halves():
    g = Grid(2, 32, 30.0)
    base = mean_zero(smooth_field(g, 9, rule="1/2"))
    ratios = []
    for n in (0.08, 0.04):
        z = base * (n / hs_norm(g, base.values, 0, 0))
        _, rep = invert_M(z, tol=1e-14)
        ratios.append(rep.ratio)
    assert 0.35 < ratios[1] / ratios[0] < 0.65


def test_invert_M_guards():
    g = Grid(2, 32, 30.0)
    base = mean_zero(smooth_field(g, 9, rule="1/2"))
    big = base * (1.0 / hs_norm(g, base.values, 0, 0))
    with pytest.raises(SmallnessViolated):
        invert_M(big)
    with pytest.raises(SmallnessViolated):
        invert_M_array(g, (big * 50).values, 0.0, 0.0, delta=None)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_w_identity(d):
    N = {1: 64, 2: 32, 3: 16}[d]
    g = Grid(d, N, 6.0 * N / 8)
    assert w_identity_residual(SpectralField(g, np.zeros(g.shape, complex))) == 0.0
    for seed in range(4):
        u = smooth_field(g, seed, amplitude=0.1, rule="1/2")
        assert w_identity_residual(u) <= 1e-10
    assert w_identity_residual(u, ZeroModeState(0.01, 0.0)) <= 1e-10


def test_w_identity_single_low_mode():
    g = Grid(2, 32, 40.0)
    x = g.x[0]
    u = SpectralField(g, 0.05 * np.exp(2j * np.pi * x / 40.0) + np.zeros(g.shape))
    assert w_identity_residual(u) <= 1e-12


def test_singularity_removal():
    vals = []
    for L in (20.0, 40.0):
        g = Grid(2, int(3.2 * L), L)
        r2 = sum((x - L / 2) ** 2 for x in g.x)
        u = (1 + 1j) * 0.05 * np.exp(-r2 / 2)
        vals.append(singular_and_regular_forcing(g, u))
    (s1, r1), (s2, r2) = vals
    assert s2 / s1 > 1.5
    assert r2 / r1 < 1.2
