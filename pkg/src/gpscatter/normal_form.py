"""Nonlinear terms and the low-frequency normal form.

For ``u = u1 + i u2`` solving ``i u' + Lap u - 2 Re u = F(u)``::

    F(u)  = (u + 2 conj(u) + |u|^2) u
    w     = u + P|u|^2 / 2
    i w'  = -Lap w + 2 Re w + G1 + i G2
    G1    = (3 - P) u1^2 + Q u2^2 + P Lap |u|^2 / 2 + |u|^2 u1
    G2    = 2 Q(u1 u2) + grad P . (u2 grad u1 - u1 grad u2) + Q(|u|^2 u2)
    z     = V^{-1} w = v + U^{-1} P |V v|^2 / 2 =: M v

Products are taken pointwise on the grid.  Callers keep inputs inside the
half-band mask (``"1/2"``) when they need alias-free quadratic products.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .besov import hs_norm
from .grid import Grid, SpectralField, fft, ifft
from .multipliers import (
    MultiplierSpec,
    cutoff_chi,
    LAPLACIAN,
    P,
    P_m2,
    Q,
    Q_m2,
    U_INV_P,
    U_inv,
    V_array,
    ZeroModeState,
    apply_array,
    apply_sum,
)


NEG_P = MultiplierSpec("-P", lambda g: -cutoff_chi(g.kmag), zero_value=-1.0)
HALF_P_LAPLACIAN = MultiplierSpec("P Delta / 2", lambda g: -(g.kmag**2) * cutoff_chi(g.kmag) / 2)


class SmallnessViolated(RuntimeError):
    """A fixed-point iteration stopped contracting or its input was too large."""


def _masked(grid: Grid, values: np.ndarray, rule: str | None) -> np.ndarray:
    if rule is None:
        return values
    out = ifft(grid, fft(grid, values) * grid.dealias_mask(rule))
    return out.real if np.isrealobj(values) else out


def F_array(u: np.ndarray) -> np.ndarray:
    a2 = u.real**2 + u.imag**2
    return u * u + 2 * a2 + a2 * u


def nonlinearity_F(u: SpectralField, dealias: str | None = "2/3") -> SpectralField:
    """``F(u) = u^2 + 2|u|^2 + |u|^2 u`` evaluated pointwise, then dealiased."""
    g = u.grid
    return SpectralField(g, _masked(g, F_array(u.physical()), dealias), frame=u.frame)


@dataclass(frozen=True)
class NonlinearTerms:
    G1: np.ndarray
    G2: np.ndarray

    def combined(self) -> np.ndarray:
        return self.G1 + 1j * self.G2


@lru_cache(maxsize=64)
def _odd_half(grid: Grid, axis: int, with_P: bool) -> np.ndarray:
    """Half-spectrum ``i xi_a`` (times ``chi`` when ``with_P``) with the axis Nyquist plane zeroed.

    For real fields the Nyquist contribution of an odd symbol cancels against
    its partner, so zeroing it matches taking the real part of the full transform.
    """
    sym = 1j * np.broadcast_to(grid.xi[axis], grid.shape).copy()
    if with_P:
        sym = sym * cutoff_chi(grid.kmag)
    idx = [slice(None)] * grid.d
    idx[axis] = grid.N // 2
    sym[tuple(idx)] = 0.0
    out = np.ascontiguousarray(sym[..., : grid.N // 2 + 1])
    out.setflags(write=False)
    return out


def compute_G_array(grid: Grid, u: np.ndarray) -> NonlinearTerms:
    u1 = np.ascontiguousarray(u.real)
    u2 = np.ascontiguousarray(u.imag)
    a2 = u1 * u1 + u2 * u2
    G1 = 3 * u1 * u1 + a2 * u1 + apply_sum(grid, [(NEG_P, u1 * u1), (Q, u2 * u2), (HALF_P_LAPLACIAN, a2)])
    axes = tuple(range(grid.d))
    rf = lambda f: sfft.rfftn(f, axes=axes, norm="forward")
    irf = lambda c: sfft.irfftn(c, s=grid.shape, axes=axes, norm="forward")
    flux = rf(2 * u1 * u2 + a2 * u2) * Q.on(grid)[..., : grid.N // 2 + 1]
    c1, c2 = rf(u1), rf(u2)
    for a in range(grid.d):
        d1 = irf(_odd_half(grid, a, False) * c1)
        d2 = irf(_odd_half(grid, a, False) * c2)
        flux += _odd_half(grid, a, True) * rf(u2 * d1 - u1 * d2)
    return NonlinearTerms(G1, irf(flux))


def compute_G(u: SpectralField, dealias: str | None = None) -> NonlinearTerms:
    g = u.grid
    terms = compute_G_array(g, u.physical())
    return NonlinearTerms(_masked(g, terms.G1, dealias), _masked(g, terms.G2, dealias))


def q_split(u2: SpectralField) -> tuple[SpectralField, SpectralField]:
    """``Q(u2 Q_{-2} u2)`` and ``Q(Q_{-2} u2 P_{-2} u2)``; together they equal ``Q u2^2``."""
    g = u2.grid
    f = np.ascontiguousarray(u2.physical().real)
    hi = apply_array(Q_m2, g, f)
    lo = apply_array(P_m2, g, f)
    first = apply_array(Q, g, f * hi)
    second = apply_array(Q, g, hi * lo)
    return SpectralField(g, first, real=True), SpectralField(g, second, real=True)


def normal_form_array(grid: Grid, u: np.ndarray) -> np.ndarray:
    return u + apply_array(P, grid, np.abs(u) ** 2) / 2


def to_normal_form(u: SpectralField) -> SpectralField:
    """``w = N(u) = u + P|u|^2 / 2``."""
    return SpectralField(u.grid, normal_form_array(u.grid, u.physical()), frame="w")


def correction_array(grid: Grid, v: np.ndarray) -> np.ndarray:
    """``U^{-1} P |V v|^2 / 2`` with the zero mode projected out."""
    return apply_array(U_INV_P, grid, np.abs(V_array(grid, v)) ** 2) / 2


def M_array(grid: Grid, v: np.ndarray) -> np.ndarray:
    return v + correction_array(grid, v)


def apply_M(v: SpectralField) -> SpectralField:
    """``z = M v = v + U^{-1} P |V v|^2 / 2``."""
    return SpectralField(v.grid, M_array(v.grid, v.physical()), frame="z")


@dataclass
class FixedPointReport:
    iterations: int
    residual: float
    ratio: float

    def to_json(self) -> dict:
        return asdict(self)


def invert_M_array(
    grid: Grid,
    z: np.ndarray,
    sigma: float,
    s: float,
    tol: float = 1e-11,
    max_iter: int = 200,
    delta: float | None = 0.1,
) -> tuple[np.ndarray, FixedPointReport]:
    if delta is not None:
        nz = hs_norm(grid, z, sigma, s)
        if nz > delta:
            raise SmallnessViolated(f"||z||_H^(sigma,s) = {nz:.3g} exceeds the fixed-point threshold {delta}")
    v = z
    prev = None
    ratio = 0.0
    bad = 0
    for it in range(1, max_iter + 1):
        nxt = z - correction_array(grid, v)
        res = hs_norm(grid, nxt - v, sigma, s)
        if prev is not None and prev > 0:
            ratio = res / prev
            bad = bad + 1 if ratio >= 1 else 0
            if bad >= 3:
                raise SmallnessViolated(f"fixed-point iteration stopped contracting (ratio {ratio:.3g})")
        v = nxt
        if res < tol:
            return v, FixedPointReport(it, res, ratio)
        prev = res
    raise SmallnessViolated(f"no convergence in {max_iter} iterations (residual {res:.3g})")


def invert_M(
    z: SpectralField,
    tol: float = 1e-11,
    max_iter: int = 200,
    sigma: float = 0.0,
    s: float | None = None,
    delta: float | None = 0.1,
) -> tuple[SpectralField, FixedPointReport]:
    """Solve ``v = z - U^{-1} P |V v|^2 / 2`` by plain iteration from ``v0 = z``."""
    g = z.grid
    s = g.d / 2 - 1 if s is None else s
    v, rep = invert_M_array(g, z.physical(), sigma, s, tol, max_iter, delta)
    return SpectralField(g, v, frame="v"), rep


def time_derivative(grid: Grid, u: np.ndarray) -> np.ndarray:
    """``u' = -i(-Lap u + 2 Re u + F(u))``."""
    return -1j * (-apply_array(LAPLACIAN, grid, u) + 2 * u.real + F_array(u))


def w_identity_residual(u: SpectralField, mean: ZeroModeState | None = None) -> float:
    """Relative L2 residual of ``i w' = -Lap w + 2 Re w + G1 + i G2`` at one instant.

    ``w'`` comes from the chain rule ``u' + P Re(conj(u) u')``; the zero mode
    is left out of the residual.
    """
    g = u.grid
    uu = u.physical() + (mean.value if mean is not None else 0.0)
    ud = time_derivative(g, uu)
    wd = ud + apply_array(P, g, np.ascontiguousarray((np.conj(uu) * ud).real))
    w = normal_form_array(g, uu)
    lhs = 1j * wd
    rhs = -apply_array(LAPLACIAN, g, w) + 2 * w.real + compute_G_array(g, uu).combined()
    lc, rc = fft(g, lhs), fft(g, rhs)
    lc.flat[0] = rc.flat[0] = 0.0
    den = np.linalg.norm(lc)
    if den == 0.0:
        return float(np.linalg.norm(rc))
    return float(np.linalg.norm(lc - rc) / den)


def lowest_mode(grid: Grid, values: np.ndarray) -> float:
    """Largest ``|int f e^{-i xi.x} dx|`` over the ``2d`` smallest nonzero lattice frequencies."""
    c = fft(grid, values) * grid.volume
    best = 0.0
    for a in range(grid.d):
        for sgn in (1, -1):
            idx = [0] * grid.d
            idx[a] = sgn
            best = max(best, abs(c[tuple(idx)]))
    return best


def singular_and_regular_forcing(grid: Grid, u: np.ndarray) -> tuple[float, float]:
    """Lowest-mode size of ``V^{-1} i F(u)`` and of ``i G1 - U^{-1} G2``."""
    raw = V_array(grid, 1j * F_array(u), "inverse")
    G = compute_G_array(grid, u)
    reg = 1j * G.G1 - apply_array(U_inv, grid, G.G2)
    return lowest_mode(grid, raw), lowest_mode(grid, reg)
