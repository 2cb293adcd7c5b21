import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpscatter.grid import (
    Grid,
    RepresentationError,
    SpectralField,
    annulus,
    fft,
    l2_norm,
    make_grid,
    plane_wave,
    random_field,
    read_snapshot,
    transform,
    write_snapshot,
)


def test_unit_box_frequencies_are_integers():
    g = make_grid(1, 8, 2 * np.pi)
    assert sorted(g.xi[0].tolist()) == list(range(-4, 4))


def test_spacing():
    g = make_grid(2, 16, 4 * np.pi)
    assert g.dxi == pytest.approx(0.5)
    assert g.xi_max == pytest.approx(np.pi * 16 * np.sqrt(2) / (4 * np.pi))


@pytest.mark.parametrize("d,N,L", [(1, 7, 1.0), (5, 8, 1.0), (0, 8, 1.0), (1, 14, 1.0), (1, 8, 0.0), (1, 4, 1.0)])
def test_rejects_bad_grids(d, N, L):
    with pytest.raises(ValueError):
        Grid(d, N, L)


def test_five_smooth_sizes_allowed():
    assert Grid(4, 24, 1.0).shape == (24,) * 4


def test_lattice_closed_under_negation():
    g = Grid(2, 8, 1.0)
    k = np.arange(64).reshape(8, 8)
    n = g.negate(k)
    assert n[1, 2] == k[-1, -2]
    assert n[4, 0] == k[4, 0]  # Nyquist row pairs with itself
    assert np.array_equal(g.negate(n), k)


def test_constant_transforms_to_zero_mode():
    g = Grid(2, 16, 3.0)
    c = fft(g, np.full(g.shape, 2.5 + 1j))
    assert c.flat[0] == pytest.approx(2.5 + 1j)
    c.flat[0] = 0
    assert np.max(np.abs(c)) < 1e-15


def test_single_mode_is_single_coefficient():
    g = Grid(2, 16, 2 * np.pi)
    f = plane_wave(g, (3, -2), 0.7)
    c = f.coefficients()
    assert abs(c[3, -2] - 0.7) < 1e-14
    c = c.copy()
    c[3, -2] = 0
    assert np.max(np.abs(c)) < 1e-14


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(1, 3))
def test_round_trip_and_plancherel(seed, d):
    g = Grid(d, 16, 5.0)
    f = random_field(g, lambda r: np.ones_like(r), seed)
    back = transform(transform(f, "forward"), "inverse")
    assert np.max(np.abs(back.values - f.values)) <= 1e-13 * np.max(np.abs(f.values))
    phys = l2_norm(f)
    freq = l2_norm(f.to_frequency())
    assert phys == pytest.approx(freq, rel=1e-12)


def test_representation_mismatch():
    g = Grid(1, 8, 1.0)
    f = SpectralField(g, np.zeros(8), rep="frequency")
    with pytest.raises(RepresentationError):
        transform(f, "forward")
    with pytest.raises(RepresentationError):
        transform(f.to_physical(), "inverse")


def test_real_field_is_hermitian():
    g = Grid(2, 16, 3.0)
    f = random_field(g, lambda r: np.exp(-r), 3, real=True)
    c = f.coefficients()
    assert np.max(np.abs(c - np.conj(g.negate(c)))) < 1e-14


def test_random_field_determinism_and_zero_profile():
    g = Grid(2, 16, 3.0)
    a = random_field(g, lambda r: np.exp(-r), 5)
    b = random_field(g, lambda r: np.exp(-r), 5)
    assert np.array_equal(a.values, b.values)
    z = random_field(g, lambda r: 0 * r, 5)
    assert not np.any(z.values)


def test_annulus_profile_support():
    g = Grid(2, 32, 20.0)
    f = random_field(g, annulus(0.5, 2.0), 1)
    c = f.coefficients()
    outside = (g.kmag < 0.5) | (g.kmag > 2.0)
    assert np.max(np.abs(c[outside])) < 1e-14
    assert np.max(np.abs(c[~outside])) > 0


def test_fields_are_immutable():
    g = Grid(1, 8, 1.0)
    f = SpectralField(g, np.ones(8))
    with pytest.raises(ValueError):
        f.values[0] = 2


def test_dealias_masks():
    g = Grid(1, 12, 1.0)
    assert sorted(g.k1d[g.dealias_mask("2/3")].tolist()) == [-3, -2, -1, 0, 1, 2, 3]
    assert sorted(g.k1d[g.dealias_mask("1/2")].tolist()) == [-2, -1, 0, 1, 2]
    with pytest.raises(ValueError):
        g.dealias_mask("3/4")


def test_snapshot_round_trip(tmp_path):
    g = Grid(3, 8, 2.5)
    f = random_field(g, lambda r: np.exp(-r), 2, frame="z").to_frequency()
    write_snapshot(tmp_path / "f.gpsf", f)
    back = read_snapshot(tmp_path / "f.gpsf")
    assert back.grid == g and back.frame == "z" and back.rep == "frequency"
    assert np.array_equal(back.values, f.values)
    raw = (tmp_path / "f.gpsf").read_bytes()
    assert raw[:4] == b"GPSF"
    (tmp_path / "bad.gpsf").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "bad.gpsf")


def test_field_arithmetic_mixes_representations():
    g = Grid(1, 8, 1.0)
    a = random_field(g, lambda r: np.ones_like(r), 1)
    b = random_field(g, lambda r: np.ones_like(r), 2)
    s = a + b.to_frequency()
    assert np.allclose(s.values, a.values + b.values)
    assert np.allclose((2 * a).values, 2 * a.values)
    assert a.mean() == pytest.approx(a.to_frequency().mean())
