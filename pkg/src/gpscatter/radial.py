"""Radially symmetric fields in three dimensions, carried as odd 1D profiles.

A radial ``f(|x|)`` on R^3 is stored as ``g(r) = r f(r)`` on a symmetric 1D
periodic grid.  Radial multipliers act on ``g`` with the same symbol in
``|k|``, products become ``g1 g2 / r``, and every ``L^2``-based norm picks up a
factor ``sqrt(2 pi)``.  This lets long-time free-flow experiments run on
boxes far larger than a 3D grid allows.
"""

from __future__ import annotations

import math

import numpy as np

from .besov import NormSpec, homogeneous_blocks_norm
from .grid import Grid, fft, ifft
from .multipliers import MultiplierSpec, P, U, U_inv, apply_array, cutoff_chi
from .linear import block_profile, propagate_coeffs

SQRT_2PI = math.sqrt(2 * math.pi)


def radial_grid(N: int, L: float) -> Grid:
    return Grid(1, N, L)


def radius(grid: Grid) -> np.ndarray:
    """Signed coordinate with ``r = 0`` at index 0 (FFT ordering)."""
    return grid.dx * grid.k1d.astype(float)


def odd_profile(grid: Grid, f) -> np.ndarray:
    r = radius(grid)
    g = r * f(np.abs(r))
    g[grid.N // 2] = 0.0
    return g


def block_data(grid: Grid, R: float) -> np.ndarray:
    """``g`` for the radial function with Fourier transform ``chi_R(|xi|)``."""
    k = grid.kmag
    # odd profile <-> transform 2 pi i ghat(k) / k = chi_R(k)
    with np.errstate(divide="ignore", invalid="ignore"):
        gh = np.where(k > 0, block_profile(k, R) * grid.xi[0] / (2j * math.pi), 0.0)
    return ifft(grid, gh / grid.L)


def product(grid: Grid, g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    r = radius(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r != 0, g1 * g2 / np.where(r != 0, r, 1.0), 0.0)
    out[grid.N // 2] = 0.0
    return out


def abs2(grid: Grid, g: np.ndarray) -> np.ndarray:
    return product(grid, g, np.conj(g)).real


def multiply(spec: MultiplierSpec, grid: Grid, g: np.ndarray) -> np.ndarray:
    if np.isrealobj(g):
        return apply_array(spec, grid, g)
    return apply_array(spec, grid, np.ascontiguousarray(g.real)) + 1j * apply_array(spec, grid, np.ascontiguousarray(g.imag))


def V(grid: Grid, g: np.ndarray, direction: str = "forward") -> np.ndarray:
    spec = U if direction == "forward" else U_inv
    return apply_array(spec, grid, np.ascontiguousarray(g.real)) + 1j * g.imag


def correction(grid: Grid, g: np.ndarray) -> np.ndarray:
    """Odd profile of ``U^{-1} P |V v|^2 / 2`` for the radial field with profile ``g``."""
    return apply_array(U_inv, grid, apply_array(P, grid, abs2(grid, V(grid, g)))) / 2


def hs_norm3(grid: Grid, g: np.ndarray, sigma: float, s: float) -> float:
    """``H^{sigma,s}(R^3)`` norm of the radial field with odd profile ``g``."""
    NormSpec(sigma, s, 2.0).check_embedding(3)
    c = fft(grid, g)
    chi = cutoff_chi(grid.kmag)
    low = homogeneous_blocks_norm(grid, chi * c, sigma, 2.0)
    high = homogeneous_blocks_norm(grid, (1 - chi) * c, s, 2.0)
    return SQRT_2PI * (low + high)


def free_flow(grid: Grid, g: np.ndarray, t: float) -> np.ndarray:
    return ifft(grid, propagate_coeffs(grid, fft(grid, g), t))
