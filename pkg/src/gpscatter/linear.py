"""Linear evolution ``i u' + Lap u - 2 Re u = 0`` and its dispersive decay.

The flow is diagonalized by ``v = V^{-1} u``: ``v(t) = exp(-i t H) v(0)``.
The mean of ``u`` is a Jordan block and is evolved in closed form.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .besov import block_symbol, homogeneous_blocks_norm, spacetime_from_values
from .grid import Grid, SpectralField
from .multipliers import (
    U,
    U_inv,
    U_power,
    ZeroModeState,
    dispersion_values,
    phi,
    zero_mode_evolve,
)


# --- grid propagators ------------------------------------------------------

def propagate_coeffs(grid: Grid, coeffs: np.ndarray, t: float) -> np.ndarray:
    return np.exp(-1j * t * phi(grid.kmag)) * coeffs


def propagate_diag(v: SpectralField, t: float) -> SpectralField:
    """``exp(-i t H) v``; the zero mode is left unchanged (``H(0) = 0``)."""
    out = v.replace(propagate_coeffs(v.grid, v.coefficients(), t), rep="frequency", real=False)
    return out if v.rep == "frequency" else out.to_physical()


def split_re_im(grid: Grid, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of ``Re u`` and ``Im u`` from those of ``u``."""
    cn = np.conj(grid.negate(c))
    return (c + cn) / 2, (c - cn) / 2j


def to_v_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    """``V^{-1}`` in frequency space; the zero mode is projected out."""
    a, b = split_re_im(grid, c)
    return U_inv.on(grid) * a + 1j * b * _nonzero(grid)


def from_v_coeffs(grid: Grid, cv: np.ndarray) -> np.ndarray:
    a, b = split_re_im(grid, cv)
    return U.on(grid) * a + 1j * b * _nonzero(grid)


@lru_cache(maxsize=32)
def _nonzero(grid: Grid) -> np.ndarray:
    m = np.ones(grid.shape)
    m.flat[0] = 0.0
    m.setflags(write=False)
    return m


def linear_coeffs(grid: Grid, c: np.ndarray, t: float) -> np.ndarray:
    """Exact linear flow of a full coefficient array, mean included."""
    out = from_v_coeffs(grid, propagate_coeffs(grid, to_v_coeffs(grid, c), t))
    m = zero_mode_evolve(ZeroModeState(c.flat[0].real, c.flat[0].imag), t)
    out.flat[0] = m.value
    return out


def propagate_u_linear(u: SpectralField, mean: ZeroModeState, t: float) -> tuple[SpectralField, ZeroModeState]:
    """Evolve ``u`` (mean carried in ``mean``) by the linear flow through ``V``.

    Any mean left inside ``u`` is folded into the returned state.
    """
    g = u.grid
    c = u.coefficients().copy()
    total = ZeroModeState(mean.m1 + c.flat[0].real, mean.m2 + c.flat[0].imag)
    c.flat[0] = 0.0
    out = from_v_coeffs(g, propagate_coeffs(g, to_v_coeffs(g, c), t))
    res = SpectralField(g, out, frame="u", rep="frequency")
    return (res if u.rep == "frequency" else res.to_physical()), zero_mode_evolve(total, t)


def permode_oracle(u: SpectralField, t: float, substeps: int = 10_000, mean: ZeroModeState | None = None) -> SpectralField:
    """Independent check of the linear flow: RK4 on each ``(c(xi), conj c(-xi))`` pair.

    ``c' = -i(|xi|^2 + 1) c - i conj(c(-xi))`` couples each mode to its lattice
    partner; the zero mode and the Nyquist planes are self-paired.
    """
    g = u.grid
    c = u.coefficients().astype(complex).copy()
    if mean is not None:
        c.flat[0] += mean.value
    w = g.kmag**2 + 1.0
    a = c
    b = np.conj(g.negate(c))
    h = t / substeps

    def rhs(a, b):
        return -1j * (w * a + b), 1j * (w * b + a)

    for _ in range(substeps):
        k1a, k1b = rhs(a, b)
        k2a, k2b = rhs(a + 0.5 * h * k1a, b + 0.5 * h * k1b)
        k3a, k3b = rhs(a + 0.5 * h * k2a, b + 0.5 * h * k2b)
        k4a, k4b = rhs(a + h * k3a, b + h * k3b)
        a = a + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b = b + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
    res = SpectralField(g, a, frame="u", rep="frequency")
    return res if u.rep == "frequency" else res.to_physical()


# --- radial oscillatory integrals ----------------------------------------

@lru_cache(maxsize=64)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _nodes(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite 32-point Gauss-Legendre with ``n`` panels."""
    x, w = _gauss(32)
    edges = np.linspace(lo, hi, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return xs, ws


def block_profile(r, R: float):
    """Dyadic bump ``chi(r/R) - chi(2r/R)``, supported in ``[R/2, 2R]`` and equal to 1 at ``R``."""
    return block_symbol(0, np.asarray(r) / R)


def sphere_area(k: int) -> float:
    """Surface area of the unit sphere ``S^k``."""
    return 2 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


@dataclass(frozen=True)
class StationaryPhaseQuery:
    d: int
    R: float
    x: float
    t: float

    def __post_init__(self):
        if not (1 <= self.d <= 6):
            raise ValueError("dimension must be in 1..6")
        if self.R <= 0 or self.t < 0 or self.x < 0:
            raise ValueError("need R > 0, t >= 0, |x| >= 0")


def _panels(variation: float, density: float) -> int:
    """Panels of 32 nodes giving ``density`` nodes per oscillation.

    The floor grows with ``density`` so that refinement also resolves the
    smooth cutoff when the phase barely varies.
    """
    return max(int(density // 2), int(math.ceil(density * variation / (2 * math.pi) / 32)) + 1)


def angular_factor_closed(d: int, rho: np.ndarray) -> np.ndarray:
    """``int_0^pi cos(rho cos th) sin^{d-2} th dth`` for odd ``d`` in elementary form."""
    rho = np.asarray(rho, dtype=float)
    small = rho < 1e-2
    rs = np.where(small, 1.0, rho)
    if d == 3:
        out = 2 * np.sin(rs) / rs
        series = 2 - rho**2 / 3 + rho**4 / 60
    elif d == 5:
        out = 4 * np.sin(rs) / rs**3 - 4 * np.cos(rs) / rs**2
        series = 4 / 3 - 2 * rho**2 / 15 + rho**4 / 210
    else:
        raise ValueError(f"no closed form for d = {d}")
    return np.where(small, series, out)


def radial_integral(d: int, R: float, t: float, xs, density: float = 4.0, closed_form: bool = True) -> np.ndarray:
    """``int chi_R(|xi|) exp(i phi(|xi|) t + i xi.x) dxi`` for an array of ``|x|``.

    Reduced to a radial integral over ``[R/2, 2R]`` times the angular factor
    ``int_0^pi cos(r|x| cos th) sin^{d-2} th dth``.  Both integrals use
    composite Gauss-Legendre with ``density`` nodes per oscillation; for
    ``d = 3, 5`` the angular factor has an elementary closed form, used unless
    ``closed_form=False``.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    lo, hi = R / 2, 2 * R
    xmax = float(xs.max(initial=0.0))
    var_r = t * (phi(hi) - phi(lo)) + xmax * (hi - lo)
    r, wr = _nodes(lo, hi, _panels(var_r, density))
    base = block_profile(r, R) * np.exp(1j * t * phi(r)) * wr
    if d == 1:
        return 2 * (np.cos(np.outer(xs, r)) @ base)
    base = base * r ** (d - 1)
    if closed_form and d in (3, 5):
        return sphere_area(d - 2) * (angular_factor_closed(d, np.outer(xs, r)) @ base)
    th, wt = _nodes(0.0, math.pi, _panels(2 * hi * xmax, density))
    ang_w = np.sin(th) ** (d - 2) * wt
    cos_th = np.cos(th)
    out = np.empty(xs.size, dtype=complex)
    for i, x in enumerate(xs):
        A = np.cos(np.outer(r * x, cos_th)) @ ang_w
        out[i] = A @ base
    return sphere_area(d - 2) * out


@dataclass
class OracleValue:
    value: complex
    error: float
    converged: bool


def stationary_phase_oracle(q: StationaryPhaseQuery, tol: float = 1e-8, max_density: float = 64.0) -> OracleValue:
    """Adaptive evaluation: double the node density until two passes agree to
    ``tol`` times the integrand scale ``int chi_R(|xi|) dxi``."""
    scale = abs(radial_integral(q.d, q.R, 0.0, [0.0], density=8.0)[0])
    density = 4.0
    prev = radial_integral(q.d, q.R, q.t, [q.x], density)[0]
    while density < max_density:
        density *= 2
        cur = radial_integral(q.d, q.R, q.t, [q.x], density)[0]
        err = abs(cur - prev)
        if err <= tol * scale:
            return OracleValue(complex(cur), float(err), True)
        prev = cur
    return OracleValue(complex(prev), float(err), False)


def envelope_bound(d: int, R: float, t):
    """``t^{-d/2} (phi'(R)/R)^{-(d-1)/2} phi''(R)^{-1/2}``."""
    _, d1, d2 = dispersion_values(R)
    return np.asarray(t, dtype=float) ** (-d / 2) * (d1 / R) ** (-(d - 1) / 2) * d2 ** (-0.5)


def ray_points(R: float, t: float, n: int = 200) -> np.ndarray:
    """Candidate ``|x|`` for the supremum: the group-velocity ray plus the stationary points."""
    _, v_lo, _ = dispersion_values(R / 2)
    _, v_hi, _ = dispersion_values(2 * R)
    _, v_R, _ = dispersion_values(R)
    pts = np.linspace(0.5 * v_lo * t, 1.5 * v_hi * t, n)
    return np.concatenate([pts, [v_R * t]])


def sup_kernel(d: int, R: float, t: float, n: int = 200, density: float = 4.0) -> float:
    """``sup_x |int chi_R e^{i phi t + i xi x}|`` over the ray, refined around the best sample."""
    xs = ray_points(R, t, n)
    vals = np.abs(radial_integral(d, R, t, xs, density))
    i = int(np.argmax(vals))
    step = (xs[1] - xs[0]) if n > 1 else 1.0
    fine = np.linspace(max(xs[i] - step, 0.0), xs[i] + step, 21)
    return float(max(vals.max(), np.abs(radial_integral(d, R, t, fine, density)).max()))


# --- decay fits ------------------------------------------------------------

@dataclass
class DecayFitResult:
    exponent: float
    predicted: float
    window: tuple[float, float]
    residual: float
    constant: float
    times: list = field(default_factory=list, repr=False)
    norms: list = field(default_factory=list, repr=False)

    @property
    def reliable(self) -> bool:
        return self.residual <= 0.1

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("times")
        out.pop("norms")
        out["window"] = list(self.window)
        out["reliable"] = self.reliable
        return out


def fit_power_law(times, values) -> tuple[float, float, float]:
    """Least-squares slope, intercept and RMS residual in log-log space."""
    lt, lv = np.log(np.asarray(times, float)), np.log(np.asarray(values, float))
    A = np.vstack([lt, np.ones_like(lt)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, icpt] - lv) ** 2)))
    return float(slope), float(icpt), resid


def fit_window_start(R: float) -> float:
    _, _, d2 = dispersion_values(R)
    return 10.0 / (d2 * R * R)


def decay_fit_oracle(d: int, R: float, times, n: int = 200) -> DecayFitResult:
    """Sup-norm decay of the radial kernel; the constant is measured against
    :func:`envelope_bound` in the unitary normalization ``(2 pi)^{-d/2}``."""
    times = np.asarray(times, dtype=float)
    sups = np.array([sup_kernel(d, R, t, n) for t in times])
    slope, _, resid = fit_power_law(times, sups)
    const = float(np.max(sups * (2 * math.pi) ** (-d / 2) / envelope_bound(d, R, times)))
    return DecayFitResult(slope, -d / 2, (float(times[0]), float(times[-1])), resid, const, list(times), list(sups))


class WrapAroundError(ValueError):
    """The wave packet would reach its periodic image within the sampled times."""


def _support_radius(grid: Grid, c: np.ndarray) -> float:
    a = np.abs(c)
    keep = a > 1e-8 * a.max(initial=0.0)
    return float(grid.kmag[keep].max(initial=0.0))


def decay_fit(phi0: SpectralField, q: float, times) -> DecayFitResult:
    """Fit the ``Bdot^0_q`` decay of ``exp(-itH) phi0`` on the grid.

    Raises :class:`WrapAroundError` when ``phi'(R) max(times) >= L/2`` with
    ``R`` the largest frequency carried by ``phi0``.
    """
    g = phi0.grid
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and increasing")
    if times[-1] / times[0] < 10:
        raise ValueError("times must span at least one decade")
    c = phi0.coefficients()
    if not np.any(np.abs(c.flat[1:]) > 0):
        raise ValueError("the datum has no nonzero lattice frequencies")
    R = _support_radius(g, c)
    _, speed, _ = dispersion_values(R)
    if speed * times[-1] >= g.L / 2:
        raise WrapAroundError(
            f"group speed {speed:.3g} x t_max {times[-1]:.3g} reaches half the box (L/2 = {g.L / 2:.3g})"
        )
    norms = [homogeneous_blocks_norm(g, propagate_coeffs(g, c, t), 0.0, q) for t in times]
    slope, _, resid = fit_power_law(times, norms)
    sigma = 0.5 - (0.0 if math.isinf(q) else 1.0 / q)
    q_dual = 1.0 if math.isinf(q) else q / (q - 1.0)
    dual = homogeneous_blocks_norm(g, U_power((g.d - 2) * sigma).on(g) * c, 0.0, q_dual)
    const = float(np.max(np.asarray(norms) * times ** (g.d * sigma) / dual))
    return DecayFitResult(slope, -g.d * sigma, (float(times[0]), float(times[-1])), resid, const, list(times), list(norms))


# --- Strichartz -----------------------------------------------------------

def strichartz_exponent(d: int, q: float) -> float:
    return (d - 2) / 2 * (0.5 - (0.0 if math.isinf(q) else 1.0 / q))


def check_admissible(d: int, p: float, q: float) -> None:
    if not (2 <= p <= math.inf and 2 <= q <= math.inf):
        raise ValueError("exponents must lie in [2, inf]")
    if p == 2 and math.isinf(q):
        raise ValueError("the endpoint (p, q) = (2, inf) is excluded")
    lhs = (0.0 if math.isinf(p) else 2.0 / p) + (0.0 if math.isinf(q) else d / q)
    if abs(lhs - d / 2) > 1e-12:
        raise ValueError(f"(p, q) = ({p}, {q}) is not admissible: 2/p + d/q = {lhs} != d/2")


def strichartz_ratio(phi0: SpectralField, p: float, q: float, T: float, mesh: float) -> float:
    """``||exp(-itH) phi||_{L^p([0,T]) Bdot^0_q} / ||U^s phi||_{L^2}``."""
    g = phi0.grid
    check_admissible(g.d, p, q)
    s = strichartz_exponent(g.d, q)
    c = phi0.coefficients().copy()
    c.flat[0] = 0.0
    den = math.sqrt(float(np.sum(np.abs(U_power(s).on(g) * c) ** 2)) * g.volume)
    if den == 0.0:
        raise ZeroDivisionError("Strichartz ratio of the zero field")
    n = int(round(T / mesh))
    times = np.linspace(0.0, T, n + 1)
    vals = [homogeneous_blocks_norm(g, propagate_coeffs(g, c, t), 0.0, q) for t in times]
    return spacetime_from_values(vals, p, T / n) / den


# --- low-frequency gain ---------------------------------------------------

def gain_envelopes(d: int, radii, decades: float = 1.0, samples: int = 5, n: int = 120) -> dict:
    """Late-time constant ``max_t t^{d/2} sup_x |kernel|`` for blocks at each radius.

    Each block's window starts at :func:`fit_window_start`.  The kernel of a
    block ``chi_R`` has an R-independent ``L^1`` norm, so these constants
    compare blocks of matched ``Bdot^0_1`` size.
    """
    out = {}
    for R in radii:
        t0 = max(fit_window_start(R), 10.0)
        times = t0 * np.logspace(0.0, decades, samples)
        sups = np.array([sup_kernel(d, R, t, n) for t in times])
        out[float(R)] = float(np.max(sups * times ** (d / 2)))
    return out
