"""Nonlinear time stepping, forward scattering diagnostics and wave operators.

The solver is Strang splitting of ``u' = A u - i Pi F(u)``: half a step of the
pointwise nonlinear flow (RK4, every stage projected by the dealias mask
``Pi``), one exact step of the linear flow ``A`` (mean included through its
Jordan block), and another nonlinear half step.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .besov import hs_norm
from .grid import Grid, SpectralField, fft, ifft
from .linear import linear_coeffs, propagate_coeffs, to_v_coeffs, from_v_coeffs
from .multipliers import U_inv, ZeroModeState, apply_array, phi
from .normal_form import (
    F_array,
    M_array,
    SmallnessViolated,
    compute_G_array,
    invert_M_array,
    w_identity_residual,
)

SOUND_SPEED = math.sqrt(2.0)


class BlowupGuard(RuntimeError):
    """The sup norm left the perturbative regime ``|u| <= 1``."""


class HorizonError(ValueError):
    """A scattering horizon exceeds the box recurrence guard."""


@dataclass(frozen=True)
class SolveConfig:
    dt: float = 0.1
    T: float = 16.0
    order: int = 2
    dealias: str = "2/3"
    cadence: int = 1
    eps_max: float = 0.1
    sigma: float = 0.0
    s: float | None = None
    substeps: int = 1
    fp_delta: float | None = None
    margin: float = 2.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T < 0:
            raise ValueError(f"T must be nonnegative, got {self.T}")
        if self.order != 2:
            raise ValueError("only the second-order Strang splitting is implemented")
        if self.cadence < 1 or self.substeps < 1:
            raise ValueError("cadence and substeps must be positive")

    def norm_s(self, d: int) -> float:
        return d / 2 - 1 if self.s is None else self.s

    @property
    def steps(self) -> int:
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ValueError(f"T={self.T} is not a multiple of dt={self.dt}")
        return n

    def check_phase(self, grid: Grid) -> None:
        top = float(phi(grid.kmag.max()))
        if self.dt * top >= 2 * math.pi:
            warnings.warn(f"dt * max phi = {self.dt * top:.3g} >= 2 pi; the fastest modes are under-resolved", stacklevel=2)

    def to_json(self) -> dict:
        return asdict(self)


def recurrence_guard(grid: Grid, margin: float = 2.0) -> float:
    """Largest admissible horizon ``margin * L / (2 sqrt 2)``."""
    return margin * grid.L / (2 * SOUND_SPEED)


def check_horizon(grid: Grid, T: float, margin: float = 2.0) -> None:
    limit = recurrence_guard(grid, margin)
    if T >= limit:
        raise HorizonError(f"horizon T={T} reaches the recurrence guard {limit:.3g} for L={grid.L}")


# --- one step --------------------------------------------------------------

def _project(grid: Grid, values: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    if mask is None:
        return values
    return ifft(grid, fft(grid, values) * mask)


def nonlinear_flow(grid: Grid, u: np.ndarray, h: float, mask: np.ndarray | None, substeps: int = 1) -> np.ndarray:
    """RK4 for ``u' = -i Pi F(u)`` over time ``h``; ``u`` includes its mean."""

    def rhs(x):
        return -1j * _project(grid, F_array(x), mask)

    k = h / substeps
    for _ in range(substeps):
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * k * k1)
        k3 = rhs(u + 0.5 * k * k2)
        k4 = rhs(u + k * k3)
        u = u + k / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def _check_amplitude(u: np.ndarray) -> None:
    top = float(np.max(np.abs(u)))
    if not np.isfinite(top) or top > 1.0:
        raise BlowupGuard(f"sup |u| = {top:.3g} exceeds 1")


def step_total(grid: Grid, u: np.ndarray, dt: float, rule: str | None = "2/3", substeps: int = 1) -> np.ndarray:
    """One Strang step on samples that include the mean; ``dt`` may be negative."""
    mask = grid.dealias_mask(rule) if rule else None
    _check_amplitude(u)
    u = nonlinear_flow(grid, u, dt / 2, mask, substeps)
    u = ifft(grid, linear_coeffs(grid, fft(grid, u), dt))
    u = nonlinear_flow(grid, u, dt / 2, mask, substeps)
    _check_amplitude(u)
    return u


def _split(grid: Grid, total: np.ndarray) -> tuple[SpectralField, ZeroModeState]:
    mean = ZeroModeState.of(total)
    return SpectralField(grid, total - mean.value), mean


def step_strang(u: SpectralField, mean: ZeroModeState, dt: float, rule: str | None = "2/3", substeps: int = 1) -> tuple[SpectralField, ZeroModeState]:
    """Advance ``(u, mean)`` by one Strang step of the full equation."""
    g = u.grid
    return _split(g, step_total(g, u.physical() + mean.value, dt, rule, substeps))


# --- trajectories ----------------------------------------------------------

@dataclass
class Trajectory:
    grid: Grid
    times: np.ndarray
    records: list[dict]
    samples: dict[float, np.ndarray] = field(default_factory=dict)
    guard_breached: bool = False

    def state(self, t: float) -> tuple[SpectralField, ZeroModeState]:
        return _split(self.grid, self.samples[_key(t)])

    @property
    def final(self) -> np.ndarray:
        return self.samples[_key(self.times[-1])]


def _key(t: float) -> float:
    return round(float(t), 9)


def v_norm(grid: Grid, u: np.ndarray, sigma: float, s: float) -> float:
    """``||V^{-1} u||_{H^{sigma,s}}`` with the mean left out."""
    return hs_norm(grid, ifft(grid, to_v_coeffs(grid, fft(grid, u))), sigma, s)


def evolve(
    u0: SpectralField,
    cfg: SolveConfig,
    mean: ZeroModeState | None = None,
    sample_times=(),
    reverse: bool = False,
    identities: bool = False,
) -> Trajectory:
    """Integrate from ``u0`` over ``[0, T]`` (or back to ``-T`` with ``reverse``).

    Records ``t``, ``sup|u|``, ``||V^{-1}u||_{H^{sigma,s}}`` (and optionally the
    instantaneous normal-form identity residual) every ``cadence`` steps, and
    keeps full samples at ``sample_times``, at ``0`` and at the end.
    """
    g = u0.grid
    cfg.check_phase(g)
    s = cfg.norm_s(g.d)
    n = cfg.steps
    dt = -cfg.dt if reverse else cfg.dt
    u = u0.physical() + (mean.value if mean is not None else 0.0)
    wanted = {_key(t) for t in sample_times}
    wanted |= {0.0, _key(n * dt)}
    init = v_norm(g, u, cfg.sigma, s)
    breached = init > cfg.eps_max
    times, records, samples = [], [], {}

    def observe(k: int, u: np.ndarray) -> None:
        nonlocal breached
        t = k * dt
        rec = {"t": t, "sup": float(np.max(np.abs(u))), "v_norm": v_norm(g, u, cfg.sigma, s)}
        if identities:
            rec["w_residual"] = w_identity_residual(SpectralField(g, u))
        breached = breached or rec["v_norm"] > cfg.eps_max
        times.append(t)
        records.append(rec)

    for k in range(n + 1):
        if k % cfg.cadence == 0 or k == n:
            observe(k, u)
        if _key(k * dt) in wanted:
            samples[_key(k * dt)] = u.copy()
        if k < n:
            u = step_total(g, u, dt, cfg.dealias, cfg.substeps)
    return Trajectory(g, np.array(times), records, samples, breached)


# --- scattering ------------------------------------------------------------

def dyadic_times(T0: float, T: float) -> list[float]:
    if T0 <= 0 or T < T0:
        raise ValueError(f"need 0 < T0 <= T, got T0={T0}, T={T}")
    out, t = [], T0
    while t <= T * (1 + 1e-12):
        out.append(t)
        t *= 2
    return out


def _pullback(grid: Grid, values: np.ndarray, t: float) -> np.ndarray:
    """``e^{iHt}`` applied to physical samples."""
    return ifft(grid, propagate_coeffs(grid, fft(grid, values), -t))


def _push(grid: Grid, values: np.ndarray, t: float) -> np.ndarray:
    return ifft(grid, propagate_coeffs(grid, fft(grid, values), t))


@dataclass
class ScatterDiagnostics:
    times: list[float]
    cauchy_v: list[float]
    cauchy_z: list[float]
    profile: list[float]
    v_plus: SpectralField
    z_plus: SpectralField
    corrections: list[float]
    means: list[tuple[float, float]]
    records: list[dict]

    def to_json(self) -> dict:
        return {
            "times": self.times,
            "cauchy_v": self.cauchy_v,
            "cauchy_z": self.cauchy_z,
            "profile": self.profile,
            "corrections": self.corrections,
            "means": self.means,
        }

    def monotone(self, slack: float = 0.1) -> bool:
        c = self.cauchy_v
        return all(c[k + 1] <= (1 + slack) * c[k] for k in range(len(c) - 1))


def scatter_forward(u0: SpectralField, cfg: SolveConfig, T0: float = 1.0, mean: ZeroModeState | None = None) -> ScatterDiagnostics:
    """Asymptotic-state candidates from ``s_k = e^{iHt_k} v(t_k)`` at ``t_k = T0 2^k``.

    Both ``v = V^{-1} u`` and ``z = M v`` are pulled back; ``c_k`` are the
    ``H^{sigma,s}`` distances between consecutive samples.
    """
    g = u0.grid
    check_horizon(g, cfg.T, cfg.margin)
    s = cfg.norm_s(g.d)
    ts = dyadic_times(T0, cfg.T)
    traj = evolve(u0, cfg, mean, sample_times=ts)
    sv, sz, corr, means, vs = [], [], [], [], []
    for t in ts:
        tot = traj.samples[_key(t)]
        m = ZeroModeState.of(tot)
        v = ifft(g, to_v_coeffs(g, fft(g, tot)))
        z = M_array(g, v)
        vs.append(v)
        sv.append(_pullback(g, v, t))
        sz.append(_pullback(g, z, t))
        corr.append(hs_norm(g, z - v, cfg.sigma, s))
        means.append((m.m1, m.m2))
    cv = [hs_norm(g, sv[k + 1] - sv[k], cfg.sigma, s) for k in range(len(ts) - 1)]
    cz = [hs_norm(g, sz[k + 1] - sz[k], cfg.sigma, s) for k in range(len(ts) - 1)]
    vp, zp = sv[-1], sz[-1]
    prof = [hs_norm(g, vs[k] - _push(g, vp, t), cfg.sigma, s) for k, t in enumerate(ts)]
    return ScatterDiagnostics(
        ts, cv, cz, prof,
        SpectralField(g, vp, frame="v"), SpectralField(g, zp, frame="z"),
        corr, means, traj.records,
    )


# --- wave operator ---------------------------------------------------------

def z_forcing(grid: Grid, z: np.ndarray, sigma: float, s: float, delta: float | None) -> np.ndarray:
    """Right side of ``z' + iHz = U^{-1} G2 - i G1`` evaluated at ``u = V M^{-1} z``."""
    v, _ = invert_M_array(grid, z, sigma, s, tol=1e-12, delta=delta)
    u = ifft(grid, from_v_coeffs(grid, fft(grid, v)))
    G = compute_G_array(grid, u)
    return apply_array(U_inv, grid, G.G2) - 1j * G.G1


@dataclass
class WaveOperatorResult:
    u0: SpectralField
    iterations: int
    change: float
    truncation: float | None = None

    def to_json(self) -> dict:
        return {"iterations": self.iterations, "change": self.change, "truncation": self.truncation}


def _final_state_z0(grid: Grid, vp: np.ndarray, T: float, cfg: SolveConfig, tol: float, max_iter: int) -> tuple[np.ndarray, int, float]:
    s = cfg.norm_s(grid.d)
    n = round(T / cfg.dt)
    ts = np.linspace(0.0, T, n + 1)
    mask = grid.dealias_mask(cfg.dealias) if cfg.dealias else None
    zs = [_push(grid, vp, t) for t in ts]
    change = math.inf
    prev = math.inf
    bad = 0
    for it in range(1, max_iter + 1):
        # interaction picture e^{iHs} N(s), integrated backward from T by the trapezoid rule
        ints = [_pullback(grid, _project(grid, z_forcing(grid, z, cfg.sigma, s, cfg.fp_delta), mask), t) for z, t in zip(zs, ts)]
        acc = np.zeros_like(vp)
        new = [None] * len(ts)
        new[-1] = _push(grid, vp, ts[-1])
        for k in range(len(ts) - 2, -1, -1):
            acc = acc + 0.5 * cfg.dt * (ints[k] + ints[k + 1])
            new[k] = _push(grid, vp - acc, ts[k])
        change = max(hs_norm(grid, a - b, cfg.sigma, s) for a, b in zip(new, zs))
        zs = new
        if change < tol:
            return zs[0], it, change
        if change >= prev:
            bad += 1
            if bad >= 3:
                raise SmallnessViolated(f"final-state iteration stopped contracting (change {change:.3g})")
        else:
            bad = 0
        prev = change
    raise SmallnessViolated(f"final-state iteration did not converge in {max_iter} sweeps (change {change:.3g})")


def wave_operator_approx(
    v_plus: SpectralField,
    T: float,
    cfg: SolveConfig,
    tol: float = 1e-10,
    max_iter: int = 30,
    check_truncation: bool = False,
) -> WaveOperatorResult:
    """Initial data ``u(0) = V M^{-1} z(0)`` whose flow follows ``e^{-iHt} v_plus``.

    ``z`` solves the final-state Duhamel equation truncated at ``T``; the
    sweep starts from the free solution and stops once successive
    trajectories agree to ``tol`` in sup-in-time ``H^{sigma,s}``.
    """
    g = v_plus.grid
    s = cfg.norm_s(g.d)
    vp = v_plus.physical().astype(complex)
    vp = vp - vp.mean()
    if not np.any(vp):
        return WaveOperatorResult(SpectralField(g, np.zeros(g.shape, complex)), 0, 0.0, 0.0 if check_truncation else None)
    z0, it, change = _final_state_z0(g, vp, T, cfg, tol, max_iter)
    v0, _ = invert_M_array(g, z0, cfg.sigma, s, tol=1e-12, delta=cfg.fp_delta)
    u0 = ifft(g, from_v_coeffs(g, fft(g, v0)))
    trunc = None
    if check_truncation:
        z0b, _, _ = _final_state_z0(g, vp, 2 * T, cfg, tol, max_iter)
        v0b, _ = invert_M_array(g, z0b, cfg.sigma, s, tol=1e-12, delta=cfg.fp_delta)
        trunc = hs_norm(g, v0b - v0, cfg.sigma, s)
        if trunc > max(tol, 1e-3 * hs_norm(g, v0, cfg.sigma, s)):
            warnings.warn(f"truncation at T={T} changes u(0) by {trunc:.3g}", stacklevel=2)
    return WaveOperatorResult(SpectralField(g, u0), it, change, trunc)


# --- bi-Lipschitz probe ----------------------------------------------------

@dataclass
class RatioStats:
    ratios: list[float]
    skipped: int

    @property
    def min(self) -> float:
        return min(self.ratios) if self.ratios else math.nan

    @property
    def max(self) -> float:
        return max(self.ratios) if self.ratios else math.nan

    def to_json(self) -> dict:
        return {"ratios": self.ratios, "skipped": self.skipped, "min": self.min, "max": self.max}


def bilipschitz_probe(pairs, cfg: SolveConfig, T0: float = 1.0) -> RatioStats:
    """``||v_+ - v_+'|| / ||V^{-1}u0 - V^{-1}u0'||`` over data pairs (both z-frame asymptotes)."""
    ratios, skipped = [], 0
    cache: dict[int, SpectralField] = {}

    def asymptote(u: SpectralField) -> SpectralField:
        if id(u) not in cache:
            cache[id(u)] = scatter_forward(u, cfg, T0).z_plus
        return cache[id(u)]

    for a, b in pairs:
        g = a.grid
        s = cfg.norm_s(g.d)
        diff0 = v_norm(g, a.physical() - b.physical(), cfg.sigma, s)
        if diff0 == 0.0:
            skipped += 1
            continue
        da = asymptote(a).physical() - asymptote(b).physical()
        ratios.append(hs_norm(g, da, cfg.sigma, s) / diff0)
    return RatioStats(ratios, skipped)


# --- data ------------------------------------------------------------------

def make_datum(grid: Grid, profile: str = "gaussian", amplitude: float = 0.02, seed: int = 0, width: float = 2.0, rule: str = "2/3") -> SpectralField:
    """Small dealiased datum with ``sup |u0| = amplitude`` and zero mean.

    ``gaussian``: a packet ``(1+i) exp(-|x-c|^2 / (2 w^2))`` at the box
    centre with a seeded random complex phase; ``random``: band-limited
    random phases on ``|xi| <= 1``.
    """
    rng = np.random.default_rng(seed)
    if profile == "gaussian":
        r2 = sum((x - grid.L / 2) ** 2 for x in grid.x)
        ph = np.exp(1j * rng.uniform(0, 2 * np.pi))
        u = (1 + 1j) * ph * np.exp(-r2 / (2 * width**2))
    elif profile == "random":
        z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        u = ifft(grid, z * np.exp(-grid.kmag**2))
    else:
        raise ValueError(f"unknown data profile {profile!r}")
    c = fft(grid, u) * grid.dealias_mask(rule)
    c.flat[0] = 0.0
    u = ifft(grid, c)
    top = float(np.max(np.abs(u)))
    if amplitude == 0 or top == 0:
        return SpectralField(grid, np.zeros(grid.shape, complex))
    return SpectralField(grid, u * (amplitude / top))

