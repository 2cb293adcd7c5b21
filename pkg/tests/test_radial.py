import numpy as np
import pytest

from gpscatter.besov import hs_norm
from gpscatter.grid import Grid, ifft, fft
from gpscatter.linear import propagate_coeffs
from gpscatter.normal_form import correction_array
from gpscatter.radial import (
    abs2,
    block_data,
    correction,
    free_flow,
    hs_norm3,
    odd_profile,
    product,
    radial_grid,
    radius,
)


@pytest.fixture(scope="module")
def boxes():
    g3 = Grid(3, 48, 30.0)
    r3 = np.sqrt(sum((x - 15.0) ** 2 for x in g3.x))
    g1 = radial_grid(1024, 160.0)
    return g3, r3, g1


def profile(r):
    return (1 + 1j) * 0.05 * np.exp(-r**2 / 2)


def test_radius_is_odd():
    g = radial_grid(16, 8.0)
    r = radius(g)
    assert r[0] == 0 and np.allclose(r[1:8], -r[-1:-8:-1])


def test_product_of_profiles():
    g = radial_grid(64, 20.0)
    r = radius(g)
    a = odd_profile(g, lambda s: np.exp(-s**2))
    p = product(g, a, a)
    assert p[0] == 0
    mask = r != 0
    assert np.allclose(p[mask], (r * np.exp(-2 * r**2))[mask])
    assert np.allclose(abs2(g, (1 + 1j) * a), 2 * p.real)


@pytest.mark.parametrize("sigma,s", [(0.0, 0.0), (0.0, 0.5), (-0.5, 1.0)])
def test_norm_matches_three_dimensional_grid(boxes, sigma, s):
    g3, r3, g1 = boxes
    f3 = profile(r3)
    f3 = f3 - f3.mean() if sigma < 0 else f3
    n3 = hs_norm(g3, f3, sigma, s)
    n1 = hs_norm3(g1, odd_profile(g1, profile), sigma, s)
    assert n1 == pytest.approx(n3, rel=1e-2)


def test_free_flow_matches_three_dimensional_grid(boxes):
    g3, r3, g1 = boxes
    t = 1.5
    f3 = ifft(g3, propagate_coeffs(g3, fft(g3, profile(r3)), t))
    g = free_flow(g1, odd_profile(g1, profile), t)
    step = round(g3.dx / g1.dx)
    assert step * g1.dx == pytest.approx(g3.dx)
    idx = step * np.arange(1, 12)
    along_axis = f3[24, 24, 25:36]
    err = np.max(np.abs(g[idx] / radius(g1)[idx] - along_axis))
    assert err <= 2e-3 * np.max(np.abs(along_axis))


def test_correction_matches_three_dimensional_grid(boxes):
    g3, r3, g1 = boxes
    c3 = correction_array(g3, profile(r3))
    c1 = correction(g1, odd_profile(g1, profile))
    n3 = hs_norm(g3, c3, 0.0, 0.5)
    n1 = hs_norm3(g1, c1, 0.0, 0.5)
    # the 1/|xi| weight of U^{-1} makes the periodic box converge slowly from below
    assert n3 < n1 < 1.1 * n3


def test_block_data_transform():
    g = radial_grid(1024, 400.0)
    b = block_data(g, 1.0)
    # odd, real up to roundoff
    assert np.allclose(b[1:], -b[1:][::-1], atol=1e-14)
    assert np.max(np.abs(b.imag)) < 1e-14 * np.max(np.abs(b))
