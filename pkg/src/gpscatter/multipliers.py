"""Fourier multipliers of the linearized Gross-Pitaevskii operator.

Radial symbols (``r = |xi|``)::

    U(r) = r / sqrt(2 + r^2)         H(r) = r * sqrt(2 + r^2)
    P(r) = chi(r)                    Q(r) = 1 - chi(r)
    P_{-2}(r) = chi(4 r)             Q_{-2}(r) = 1 - chi(4 r)

and the componentwise symbols ``i xi_a chi(|xi|)`` of grad P.  ``V`` is the
real-linear map ``u -> U Re u + i Im u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
import scipy.fft as sfft

from .grid import Grid, SpectralField, fft, ifft

ZeroModePolicy = Literal["value", "project-out", "reject"]


class SingularZeroMode(ValueError):
    """A singular symbol met a field with nonzero mean under the ``reject`` policy."""


# --- scalar profiles -------------------------------------------------------

def _theta(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    a = _theta(x)
    b = _theta(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def cutoff_chi(r):
    """Smooth cutoff equal to 1 on ``r <= 1`` and 0 on ``r >= 2``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("cutoff_chi needs r >= 0")
    out = 1.0 - smooth_step(r - 1.0)
    return out if out.ndim else float(out)


def dispersion_values(r):
    """``(phi, phi', phi'')`` for ``phi(r) = r sqrt(2 + r^2)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("dispersion_values needs r >= 0")
    s = np.sqrt(2.0 + r * r)
    phi = r * s
    d1 = (2.0 + 2.0 * r * r) / s
    d2 = r * (6.0 + 2.0 * r * r) / s**3
    if phi.ndim == 0:
        return float(phi), float(d1), float(d2)
    return phi, d1, d2


def phi(r):
    return np.asarray(r) * np.sqrt(2.0 + np.asarray(r) ** 2)


def U_symbol(r):
    r = np.asarray(r, dtype=float)
    return r / np.sqrt(2.0 + r * r)


def H_symbol(r):
    return phi(r)


# --- multiplier specs ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MultiplierSpec:
    """A Fourier symbol evaluated on a grid plus a rule for the zero mode.

    ``symbol(grid)`` returns the symbol on the lattice; its value at the zero
    mode is ignored and replaced according to ``zero_mode``:
    ``"value"`` uses ``zero_value``, ``"project-out"`` uses 0 and ``"reject"``
    uses 0 but raises :class:`SingularZeroMode` if the symbol is singular at
    the origin and the input has a nonzero mean.
    """

    name: str
    symbol: Callable[[Grid], np.ndarray]
    zero_mode: ZeroModePolicy = "value"
    zero_value: complex = 0.0
    singular: bool = False

    def on(self, grid: Grid) -> np.ndarray:
        return _evaluate(self, grid)

    def with_policy(self, policy: ZeroModePolicy, value: complex = 0.0) -> MultiplierSpec:
        return MultiplierSpec(self.name, self.symbol, policy, value, self.singular)


_SYMBOL_CACHE: dict = {}


def _evaluate(spec: MultiplierSpec, grid: Grid) -> np.ndarray:
    key = (spec.name, spec.zero_mode, spec.zero_value, grid)
    out = _SYMBOL_CACHE.get(key)
    if out is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.array(np.broadcast_to(spec.symbol(grid), grid.shape), dtype=complex)
        out.flat[0] = spec.zero_value if spec.zero_mode == "value" else 0.0
        if not np.all(np.isfinite(out)):
            raise ValueError(f"symbol {spec.name} is not finite on the lattice")
        if np.all(out.imag == 0):
            out = out.real.copy()
        out.setflags(write=False)
        _SYMBOL_CACHE[key] = out
    return out


def _radial(name, fn, **kw) -> MultiplierSpec:
    return MultiplierSpec(name, lambda g: fn(g.kmag), **kw)


@lru_cache(maxsize=None)
def U_power(sigma: float) -> MultiplierSpec:
    """``U^sigma``; negative powers are singular at the origin."""
    sigma = float(sigma)
    if sigma < 0:
        return _radial(f"U^{sigma}", lambda r: U_symbol(r) ** sigma, zero_mode="project-out", singular=True)
    return _radial(f"U^{sigma}", lambda r: U_symbol(r) ** sigma, zero_value=1.0 if sigma == 0 else 0.0)


U = U_power(1.0)
U_inv = U_power(-1.0)
H = _radial("H", H_symbol)
P = _radial("P", cutoff_chi, zero_value=1.0)
Q = _radial("Q", lambda r: 1.0 - cutoff_chi(r))
P_m2 = _radial("P_-2", lambda r: cutoff_chi(4.0 * r), zero_value=1.0)
Q_m2 = _radial("Q_-2", lambda r: 1.0 - cutoff_chi(4.0 * r))
U_INV_P = _radial("U^-1 P", lambda r: cutoff_chi(r) / U_symbol(r), zero_mode="project-out", singular=True)
LAPLACIAN = _radial("Delta", lambda r: -(r**2))
P_LAPLACIAN = _radial("P Delta", lambda r: -(r**2) * cutoff_chi(r))


@lru_cache(maxsize=None)
def grad_P(axis: int) -> MultiplierSpec:
    return MultiplierSpec(f"d_{axis} P", lambda g: 1j * g.xi[axis] * cutoff_chi(g.kmag))


@lru_cache(maxsize=None)
def grad(axis: int) -> MultiplierSpec:
    return MultiplierSpec(f"d_{axis}", lambda g: 1j * g.xi[axis])


# --- application -----------------------------------------------------------

def _check_zero_mode(spec: MultiplierSpec, c0: complex, scale: float) -> None:
    if spec.zero_mode == "reject" and spec.singular and abs(c0) > 1e-14 * max(scale, 1.0):
        raise SingularZeroMode(f"{spec.name} is singular at xi = 0 and the input mean is {c0:.3e}")


def multiply(spec: MultiplierSpec, grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Coefficientwise product on raw frequency arrays."""
    _check_zero_mode(spec, coeffs.flat[0], float(np.max(np.abs(coeffs), initial=0.0)))
    return spec.on(grid) * coeffs


def _half(spec: MultiplierSpec, grid: Grid) -> np.ndarray:
    key = ("half", spec.name, spec.zero_mode, spec.zero_value, grid)
    out = _SYMBOL_CACHE.get(key)
    if out is None:
        out = np.ascontiguousarray(spec.on(grid)[..., : grid.N // 2 + 1])
        out.setflags(write=False)
        _SYMBOL_CACHE[key] = out
    return out


def apply_array(spec: MultiplierSpec, grid: Grid, values: np.ndarray) -> np.ndarray:
    """Apply a multiplier to physical samples; real in, real out for real even symbols."""
    if np.isrealobj(values) and np.isrealobj(spec.on(grid)):
        # real transform: the symbols used here are even, so half the spectrum suffices
        axes = tuple(range(grid.d))
        c = sfft.rfftn(values, axes=axes, norm="forward")
        _check_zero_mode(spec, c.flat[0], float(np.max(np.abs(c), initial=0.0)))
        return sfft.irfftn(_half(spec, grid) * c, s=grid.shape, axes=axes, norm="forward")
    return ifft(grid, multiply(spec, grid, fft(grid, values)))


def apply_sum(grid: Grid, terms) -> np.ndarray:
    """``sum_i m_i(D) f_i`` for real samples ``f_i`` and real even symbols, with one inverse transform."""
    axes = tuple(range(grid.d))
    acc = None
    for spec, values in terms:
        c = _half(spec, grid) * sfft.rfftn(values, axes=axes, norm="forward")
        acc = c if acc is None else acc + c
    return sfft.irfftn(acc, s=grid.shape, axes=axes, norm="forward")


def apply_multiplier(spec: MultiplierSpec, field: SpectralField) -> SpectralField:
    coeffs = multiply(spec, field.grid, field.coefficients())
    real = field.real and np.isrealobj(spec.on(field.grid))
    out = field.replace(coeffs, rep="frequency", real=real)
    return out if field.rep == "frequency" else out.to_physical()


# --- V and the zero mode ---------------------------------------------------

def V_array(grid: Grid, u: np.ndarray, direction: str = "forward", policy: ZeroModePolicy = "project-out") -> np.ndarray:
    """``U Re u + i Im u`` (forward) or ``U^-1 Re u + i Im u`` (inverse) on physical samples."""
    if direction == "forward":
        spec = U if policy == "project-out" else U.with_policy(policy)
    elif direction == "inverse":
        spec = U_inv if policy == "project-out" else U_inv.with_policy(policy)
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return apply_array(spec, grid, np.ascontiguousarray(u.real)) + 1j * u.imag


def apply_V(field: SpectralField, direction: str = "forward", policy: ZeroModePolicy = "project-out") -> SpectralField:
    """Real-linear diagonalizing map; forward maps v-frame to u-frame."""
    vals = V_array(field.grid, field.physical(), direction, policy)
    frame = "u" if direction == "forward" else "v"
    if field.frame in ("w", "z"):
        frame = "w" if direction == "forward" else "z"
    out = SpectralField(field.grid, vals, frame=frame)
    return out if field.rep == "physical" else out.to_frequency()


@dataclass(frozen=True)
class ZeroModeState:
    """Mean of ``(Re u, Im u)``; the linear flow keeps ``m1`` and shears ``m2``."""

    m1: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, u: np.ndarray) -> ZeroModeState:
        m = complex(np.mean(u))
        return cls(m.real, m.imag)

    @property
    def value(self) -> complex:
        return complex(self.m1, self.m2)


def zero_mode_evolve(state: ZeroModeState, t: float) -> ZeroModeState:
    return ZeroModeState(state.m1, state.m2 - 2.0 * t * state.m1)


def twist_residual(u: SpectralField, udot: SpectralField) -> float:
    """Relative L2 mismatch of ``i u' + Lap u - 2 Re u`` and ``i V (V^-1 u' + i H V^-1 u)``."""
    g = u.grid
    uu, ud = u.physical(), udot.physical()
    lhs = 1j * ud + apply_array(LAPLACIAN, g, uu) - 2 * uu.real
    v = V_array(g, uu, "inverse")
    vd = V_array(g, ud, "inverse")
    rhs = 1j * V_array(g, vd + 1j * apply_array(H, g, v), "forward")
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))


def operator_identity_residuals(u: SpectralField) -> tuple[float, float]:
    """Relative L2 errors of ``H u = (2 - Lap) U u`` and ``H u = -Lap U^-1 u`` (mean-zero ``u``)."""
    g = u.grid
    c = u.coefficients().copy()
    c.flat[0] = 0.0
    hu = H.on(g) * c
    lap = LAPLACIAN.on(g)
    a = (2.0 - lap) * (U.on(g) * c)
    b = -lap * (U_inv.on(g) * c)
    den = np.linalg.norm(hu)
    if den == 0.0:
        return 0.0, 0.0
    return float(np.linalg.norm(a - hu) / den), float(np.linalg.norm(b - hu) / den)
