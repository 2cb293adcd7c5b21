"""Littlewood-Paley blocks and the two-tier Besov norms.

    ||f||_{B^{a,b}_q} = ||P f||_{Bdot^a_{q,2}} + ||Q f||_{Bdot^b_{q,2}}

with blocks ``phi_j(xi) = chi(|xi|/2^j) - chi(|xi|/2^{j-1})`` and l^2
summation over ``j``.  The zero mode is carried by the lowest block in
:func:`decompose` (so the blocks reconstruct the field) but carries no weight
in any norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid, SpectralField, fft, ifft
from .multipliers import SingularZeroMode, cutoff_chi


@dataclass(frozen=True)
class NormSpec:
    """Parameters of ``B^{a,b}_q``; ``q = inf`` allowed."""

    a: float
    b: float
    q: float = 2.0

    def __post_init__(self):
        if not (2.0 <= self.q <= math.inf):
            raise ValueError(f"integrability q must lie in [2, inf], got {self.q}")

    @classmethod
    def sobolev(cls, sigma: float, s: float) -> NormSpec:
        return cls(sigma, s, 2.0)

    def check_embedding(self, d: int) -> None:
        limit = 0.0 if math.isinf(self.q) else d / self.q
        if self.a > 0 and self.a >= limit:
            raise ValueError(f"low-frequency regularity a={self.a} must stay below d/q={limit}")


def dyadic_range(grid: Grid) -> tuple[int, int]:
    j_min = math.floor(math.log2(grid.dxi)) - 1
    j_max = math.ceil(math.log2(np.pi * grid.N / grid.L)) + 1
    return j_min, j_max


def block_symbol(j: int, r):
    """``phi_j(r) = chi(r/2^j) - chi(r/2^{j-1})``."""
    return cutoff_chi(np.asarray(r) / 2.0**j) - cutoff_chi(np.asarray(r) / 2.0 ** (j - 1))


@lru_cache(maxsize=64)
def block_symbols(grid: Grid) -> tuple[tuple[int, np.ndarray], ...]:
    """All lattice block symbols; the extreme blocks absorb their tails."""
    j_min, j_max = dyadic_range(grid)
    r = grid.kmag
    out = []
    for j in range(j_min, j_max + 1):
        hi = cutoff_chi(r / 2.0**j) if j < j_max else np.ones_like(r)
        lo = cutoff_chi(r / 2.0 ** (j - 1)) if j > j_min else np.zeros_like(r)
        s = hi - lo
        s.setflags(write=False)
        out.append((j, s))
    return tuple(out)


@dataclass(frozen=True)
class DyadicDecomposition:
    grid: Grid
    blocks: tuple[tuple[int, SpectralField], ...]

    def reconstruct(self) -> SpectralField:
        total = sum(b.coefficients() for _, b in self.blocks)
        return SpectralField(self.grid, total, rep="frequency").to_physical()

    def __getitem__(self, j: int) -> SpectralField:
        for jj, b in self.blocks:
            if jj == j:
                return b
        raise KeyError(j)


def decompose(field: SpectralField) -> DyadicDecomposition:
    g = field.grid
    c = field.coefficients()
    blocks = []
    for i, (j, sym) in enumerate(block_symbols(g)):
        bc = sym * c
        if i == 0:
            bc[(0,) * g.d] = c[(0,) * g.d]
        blocks.append((j, SpectralField(g, ifft(g, bc), frame=field.frame)))
    return DyadicDecomposition(g, tuple(blocks))


def _lq(values: np.ndarray, q: float, cell: float) -> float:
    a = np.abs(values)
    if math.isinf(q):
        return float(a.max(initial=0.0))
    return float((np.sum(a**q) * cell) ** (1.0 / q))


@lru_cache(maxsize=64)
def l2_block_weight(grid: Grid, reg: float) -> np.ndarray:
    """``sum_j 4^{j reg} phi_j^2`` on the lattice, zero mode dropped: the ``q = 2`` block norm is one weighted sum."""
    w = np.zeros(grid.shape)
    for j, sym in block_symbols(grid):
        w += 4.0 ** (j * reg) * sym**2
    w.flat[0] = 0.0
    w.setflags(write=False)
    return w


def homogeneous_blocks_norm(grid: Grid, coeffs: np.ndarray, reg: float, q: float) -> float:
    """``(sum_j 2^{2 j reg} ||phi_j f||_q^2)^{1/2}`` with the zero mode dropped."""
    total = 0.0
    if q == 2.0:
        a = np.abs(coeffs)
        return math.sqrt(float(np.sum(l2_block_weight(grid, float(reg)) * (a * a))) * grid.volume)
    c = coeffs.copy()
    c.flat[0] = 0.0
    for j, sym in block_symbols(grid):
        if not np.any(sym * (c != 0)):
            continue
        nj = _lq(ifft(grid, sym * c), q, grid.cell_volume)
        total += 4.0 ** (j * reg) * nj**2
    return math.sqrt(total)


def _mean_guard(coeffs: np.ndarray, grid: Grid) -> None:
    c0 = abs(coeffs.flat[0])
    if c0 > 1e-12 * max(float(np.max(np.abs(coeffs))), 1e-300):
        raise SingularZeroMode(f"negative low-frequency regularity needs a mean-zero field (mean {c0:.3e})")


@lru_cache(maxsize=64)
def _low_cut(grid: Grid) -> np.ndarray:
    chi = cutoff_chi(grid.kmag)
    chi.setflags(write=False)
    return chi


def besov_coeffs_norm(grid: Grid, coeffs: np.ndarray, spec: NormSpec) -> float:
    spec.check_embedding(grid.d)
    chi = _low_cut(grid)
    low = homogeneous_blocks_norm(grid, chi * coeffs, spec.a, spec.q)
    high = homogeneous_blocks_norm(grid, (1.0 - chi) * coeffs, spec.b, spec.q)
    return low + high


def besov_norm(field: SpectralField, spec: NormSpec) -> float:
    """``||P f||_{Bdot^a_q} + ||Q f||_{Bdot^b_q}`` by dyadic blocks and lattice quadrature."""
    return besov_coeffs_norm(field.grid, field.coefficients(), spec)


def direct_sobolev(grid: Grid, coeffs: np.ndarray, sigma: float, s: float) -> float:
    """``||P f||_{Hdot^sigma} + ||Q f||_{Hdot^s}`` with the weights ``|xi|^sigma``, ``|xi|^s``."""
    r = grid.kmag
    chi = cutoff_chi(r)
    w = np.abs(coeffs) ** 2
    w.flat[0] = 0.0
    with np.errstate(divide="ignore"):
        rs = np.where(r > 0, r, 1.0)
    low = np.sum(chi**2 * rs ** (2 * sigma) * w) * grid.volume
    high = np.sum((1 - chi) ** 2 * rs ** (2 * s) * w) * grid.volume
    return float(math.sqrt(low) + math.sqrt(high))


def sobolev_weighted_norm(field: SpectralField, sigma: float, s: float, route: str = "dyadic") -> float:
    """``H^{sigma,s} = B^{sigma,s}_2``; ``route="direct"`` uses pointwise frequency weights."""
    c = field.coefficients()
    if sigma < 0:
        _mean_guard(c, field.grid)
    if route == "dyadic":
        return besov_coeffs_norm(field.grid, c, NormSpec.sobolev(sigma, s))
    if route == "direct":
        NormSpec.sobolev(sigma, s).check_embedding(field.grid.d)
        return direct_sobolev(field.grid, c, sigma, s)
    raise ValueError(f"unknown route {route!r}")


def hs_norm(grid: Grid, values: np.ndarray, sigma: float, s: float) -> float:
    """Dyadic ``H^{sigma,s}`` norm of physical samples, mean ignored."""
    return besov_coeffs_norm(grid, fft(grid, values), NormSpec(sigma, s, 2.0))


def overlap_constants(reg: float, samples: int = 4001) -> tuple[float, float]:
    """Min and max of ``(sum_j 4^{j reg} phi_j(r)^2 / r^{2 reg})^{1/2}`` over ``r > 0``.

    The ratio is invariant under ``r -> 2r``, so one octave suffices.
    """
    r = np.exp(np.linspace(0.0, math.log(2.0), samples))
    tot = np.zeros_like(r)
    for j in range(-3, 4):
        tot += 4.0 ** (j * reg) * block_symbol(j, r) ** 2
    ratio = np.sqrt(tot / r ** (2 * reg))
    return float(ratio.min()), float(ratio.max())


def spacetime_norm(samples, p: float, spatial: NormSpec, dt: float = 1.0) -> float:
    """``(int ||f(t)||_X^p dt)^{1/p}`` by the trapezoid rule on a uniform mesh."""
    vals = np.array([besov_norm(f, spatial) if isinstance(f, SpectralField) else float(f) for f in samples])
    return spacetime_from_values(vals, p, dt)


def spacetime_from_values(vals, p: float, dt: float) -> float:
    vals = np.asarray(vals, dtype=float)
    if math.isinf(p):
        return float(vals.max(initial=0.0))
    if vals.size < 2:
        raise ValueError("need at least two time samples for a finite time exponent")
    return float(np.trapezoid(vals**p, dx=dt) ** (1.0 / p))
