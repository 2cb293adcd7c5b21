import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpscatter.grid import Grid, SpectralField, plane_wave
from gpscatter.multipliers import (
    H,
    P,
    Q,
    U,
    U_inv,
    SingularZeroMode,
    ZeroModeState,
    apply_V,
    apply_multiplier,
    cutoff_chi,
    dispersion_values,
    multiply,
    operator_identity_residuals,
    phi,
    smooth_step,
    U_symbol,
    H_symbol,
    zero_mode_evolve,
)

from conftest import smooth_field


def test_cutoff_values():
    assert cutoff_chi(0.5) == 1.0
    assert cutoff_chi(1.0) == 1.0
    assert cutoff_chi(3.0) == 0.0
    assert cutoff_chi(2.0) == 0.0
    # symmetric glue: the midpoint of the transition is exactly one half
    assert cutoff_chi(1.5) == pytest.approx(0.5, abs=1e-15)
    assert cutoff_chi(1.25) == pytest.approx(1 - smooth_step(0.25))
    with pytest.raises(ValueError):
        cutoff_chi(-1.0)


def test_cutoff_monotone_and_smooth():
    r = np.linspace(0.9, 2.1, 2001)
    c = cutoff_chi(r)
    assert np.all(np.diff(c) <= 0)
    assert np.all((c >= 0) & (c <= 1))


def test_dispersion_values_at_one():
    p, d1, d2 = dispersion_values(1.0)
    assert p == pytest.approx(np.sqrt(3), rel=1e-15)
    assert d1 == pytest.approx(2.3094011, rel=1e-7)
    assert d2 == pytest.approx(1.5396007, rel=1e-7)
    assert dispersion_values(0.0)[0] == 0.0


@pytest.mark.parametrize("r", [0.1, 0.7, 1.0, 3.0])
def test_dispersion_derivatives_by_differences(r):
    _, d1, d2 = dispersion_values(r)
    for h in (1e-3, 1e-4):
        fd1 = (phi(r + h) - phi(r - h)) / (2 * h)
        fd2 = (phi(r + h) - 2 * phi(r) + phi(r - h)) / h**2
        assert fd1 == pytest.approx(d1, rel=1e-6)
        assert fd2 == pytest.approx(d2, rel=1e-5)


@settings(max_examples=50)
@given(r=st.floats(1e-3, 1e3))
def test_symbol_identities(r):
    _, d1, d2 = dispersion_values(r)
    assert d1 > 0 and d2 > 0
    assert H_symbol(r) == pytest.approx((2 + r * r) * U_symbol(r), rel=1e-13)
    assert H_symbol(r) == pytest.approx(r * r / U_symbol(r), rel=1e-13)
    assert U_symbol(r) <= 1


def test_U_small_r_limit():
    r = 1e-8
    assert U_symbol(r) / r == pytest.approx(1 / np.sqrt(2))


def test_single_mode_multipliers():
    g = Grid(1, 16, 2 * np.pi)
    m1 = plane_wave(g, (1,))
    assert np.allclose(apply_multiplier(H, m1).values, np.sqrt(3) * m1.values)
    g2 = Grid(1, 16, 4 * np.pi)
    half = plane_wave(g2, (1,))  # |xi| = 0.5
    assert np.allclose(apply_multiplier(P, half).values, half.values)
    assert np.max(np.abs(apply_multiplier(Q, half).values)) < 1e-15


def test_U_inverse_policies_on_constant():
    g = Grid(2, 8, 3.0)
    const = SpectralField(g, np.full(g.shape, 2.0))
    assert np.max(np.abs(apply_multiplier(U_inv, const).values)) < 1e-15
    with pytest.raises(SingularZeroMode):
        multiply(U_inv.with_policy("reject"), g, const.coefficients())


def test_multiplier_linearity(grid2):
    a = smooth_field(grid2, 1)
    b = smooth_field(grid2, 2)
    lhs = apply_multiplier(U, a * 2.0 + b).values
    rhs = 2.0 * apply_multiplier(U, a).values + apply_multiplier(U, b).values
    assert np.allclose(lhs, rhs, atol=1e-14)


def test_V_examples():
    g = Grid(1, 32, 2 * np.pi)
    x = g.x[0]
    imag = SpectralField(g, 1j * np.sin(2 * x))
    assert np.allclose(apply_V(imag, "inverse").values, imag.values, atol=1e-14)
    cosx = SpectralField(g, np.cos(x))
    assert np.allclose(apply_V(cosx, "inverse").values, np.sqrt(3) * np.cos(x), atol=1e-13)
    assert apply_V(cosx, "inverse").frame == "v"


@pytest.mark.parametrize("d", [1, 2, 3])
def test_V_round_trip(d):
    g = Grid(d, 16, 7.0)
    u = smooth_field(g, d)
    back = apply_V(apply_V(u, "inverse"), "forward")
    assert np.max(np.abs(back.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))


def test_V_reject_policy():
    g = Grid(1, 8, 1.0)
    with pytest.raises(SingularZeroMode):
        apply_V(SpectralField(g, np.ones(8)), "inverse", policy="reject")


def test_zero_mode_evolution():
    assert zero_mode_evolve(ZeroModeState(1, 0), 1.0) == ZeroModeState(1, -2)
    assert zero_mode_evolve(ZeroModeState(0, 0.3), 7.0) == ZeroModeState(0, 0.3)
    assert zero_mode_evolve(zero_mode_evolve(ZeroModeState(1, 0), 2.5), -2.5) == ZeroModeState(1, 0)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_operator_identities(d):
    g = Grid(d, 32, 9.0)
    for seed in range(3):
        a, b = operator_identity_residuals(smooth_field(g, seed))
        assert a <= 1e-12 and b <= 1e-12
