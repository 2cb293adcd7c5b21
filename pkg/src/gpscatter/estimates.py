"""Exponent algebra and empirical ratio tests for the multiplicative estimates.

The trilinear bound

    |int f g h| <~ ||f||_{B^{s1,t1}_{p1}} ||g||_{B^{s2,t2}_{p2}} ||h||_{B^{s3,t3}_{p3}}

holds when, for every slot ``a`` (with ``b_a = 1/p_a``)::

    max(0, s_a, S) <= d(B - 1),   d(B - 1) <= T,   t_a <= T,   s_a < d b_a

where ``S, B, T`` are the sums of the ``s``, ``b``, ``t``.  Validity decisions
use exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .besov import homogeneous_blocks_norm, spacetime_from_values
from .grid import Grid, SpectralField, fft, ifft
from .linear import from_v_coeffs, propagate_coeffs
from .multipliers import P, apply_array, cutoff_chi, grad

Q = Fraction


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**9)


@dataclass(frozen=True)
class ExponentParameters:
    d: int
    s: Fraction
    b: Fraction
    p: Fraction
    q: Fraction
    sigma_max: Fraction


def exponent_parameters(d: int) -> ExponentParameters:
    """``s = d/2 - 1``, ``b = 1/p = 1/2 - 1/d``, ``1/q = 1/2 - 1/(2d)``, ``sigma_max = (d-3)/2 - 1/d``."""
    if d < 4:
        raise ValueError(f"the exponent set needs d >= 4, got {d}")
    b = Q(1, 2) - Q(1, d)
    return ExponentParameters(
        d=d,
        s=Q(d, 2) - 1,
        b=b,
        p=1 / b,
        q=1 / (Q(1, 2) - Q(1, 2 * d)),
        sigma_max=Q(d - 3, 2) - Q(1, d),
    )


# --- conditions ------------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    p: Fraction
    s: Fraction
    t: Fraction

    @property
    def b(self) -> Fraction:
        return 1 / self.p


@dataclass(frozen=True)
class Inequality:
    label: str
    lhs: Fraction
    rhs: Fraction
    strict: bool = False

    @property
    def slack(self) -> Fraction:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.lhs < self.rhs if self.strict else self.lhs <= self.rhs

    def to_json(self) -> dict:
        return {"label": self.label, "lhs": str(self.lhs), "rhs": str(self.rhs), "strict": self.strict, "slack": str(self.slack), "holds": self.holds}


@dataclass(frozen=True)
class EstimateCase:
    name: str
    d: int
    slots: tuple[Slot, Slot, Slot]

    def conditions(self) -> list[Inequality]:
        d = self.d
        S = sum(x.s for x in self.slots)
        B = sum(x.b for x in self.slots)
        T = sum(x.t for x in self.slots)
        mid = d * (B - 1)
        out = [Inequality("0 <= d(B-1)", Q(0), mid), Inequality("S <= d(B-1)", S, mid), Inequality("d(B-1) <= T", mid, T)]
        for a, x in enumerate(self.slots, 1):
            out.append(Inequality(f"s{a} <= d(B-1)", x.s, mid))
            out.append(Inequality(f"t{a} <= T", x.t, T))
            out.append(Inequality(f"s{a} < d b{a}", x.s, d * x.b, strict=True))
        return out

    def norm_specs(self) -> list[tuple[float, float, float]]:
        return [(float(x.s), float(x.t), float(x.p)) for x in self.slots]


@dataclass(frozen=True)
class ConditionReport:
    valid: bool
    inequalities: tuple[Inequality, ...]

    def failed(self) -> list[str]:
        return [i.label for i in self.inequalities if not i.holds]

    def to_json(self) -> dict:
        return {"valid": self.valid, "inequalities": [i.to_json() for i in self.inequalities]}


def check_conditions(case: EstimateCase) -> ConditionReport:
    ineqs = tuple(case.conditions())
    return ConditionReport(all(i.holds for i in ineqs), ineqs)


def builtin_cases(d: int, sigma, j: int = 0, k: int = 0) -> list[tuple[EstimateCase, ConditionReport]]:
    """The five product embeddings, each written as a trilinear form with the target dualized."""
    if not (0 <= j and 0 <= k and j + k <= 1):
        raise ValueError(f"need 0 <= j, k and j + k <= 1, got j={j}, k={k}")
    pp = exponent_parameters(d)
    s, b, p, q = pp.s, pp.b, pp.p, pp.q
    sg = _frac(sigma)
    two = Q(2)
    cases = [
        EstimateCase("(1)", d, (Slot(two, sg - b, s - j), Slot(p, sg - b, s - k), Slot(p, -sg - b, -s + j + k))),
        EstimateCase("(2)", d, (Slot(two, sg, s), Slot(p, sg - b, s - 1), Slot(two, b - sg, 1 - s))),
        EstimateCase("(3)", d, (Slot(q, sg - b / 2, s), Slot(q, sg - b / 2, s), Slot(two, -sg, -s))),
        EstimateCase("(4)", d, (Slot(two, sg, s), Slot(two, sg, s), Slot(p, -sg, -s))),
        EstimateCase("(5)", d, (Slot(two, sg, s), Slot(q, sg - b / 2, s), Slot(two, 1 - sg, Q(1, 2) - s))),
    ]
    return [(c, check_conditions(c)) for c in cases]


def verification_lines(d: int, sigma, j: int = 0, k: int = 0) -> dict[str, list[Inequality]]:
    """The simplified inequality lists that make each of the five cases valid."""
    pp = exponent_parameters(d)
    s, b = pp.s, pp.b
    sg = _frac(sigma)
    h = Q(d, 2)
    return {
        "(1)": [
            Inequality("sigma-3b <= d/2-2", sg - 3 * b, h - 2),
            Inequality("|sigma|-b <= d/2-2", abs(sg) - b, h - 2),
            Inequality("d/2-2 <= s", h - 2, s),
            Inequality("j+k-s <= s", j + k - s, s),
            Inequality("|sigma|-b < d/2-1", abs(sg) - b, h - 1, strict=True),
        ],
        "(2)": [
            Inequality("sigma <= d/2-1", sg, h - 1),
            Inequality("b-sigma <= d/2-1", b - sg, h - 1),
            Inequality("d/2-1 <= s", h - 1, s),
            Inequality("1-s <= s", 1 - s, s),
            Inequality("sigma < d/2", sg, h, strict=True),
        ],
        "(3)": [
            Inequality("sigma-b/2 <= d/2-1", sg - b / 2, h - 1),
            Inequality("-sigma <= d/2-1", -sg, h - 1),
            Inequality("d/2-1 <= s", h - 1, s),
            Inequality("sigma-b/2 < d/2-1/2", sg - b / 2, h - Q(1, 2), strict=True),
        ],
        "(4)": [
            Inequality("|sigma| <= d/2-1", abs(sg), h - 1),
            Inequality("d/2-1 <= s", h - 1, s),
        ],
        "(5)": [
            Inequality("sigma-b/2+1 <= d/2-1/2", sg - b / 2 + 1, h - Q(1, 2)),
            Inequality("sigma <= d/2-1/2", sg, h - Q(1, 2)),
            Inequality("1-sigma <= d/2-1/2", 1 - sg, h - Q(1, 2)),
            Inequality("d/2-1/2 <= s+1/2", h - Q(1, 2), s + Q(1, 2)),
            Inequality("1/2-s <= s+1/2", Q(1, 2) - s, s + Q(1, 2)),
        ],
    }


def first_invalid_sigma(d: int, case: str = "(1)", step=Q(1, 100), start=Q(0), stop=None) -> Fraction | None:
    """Smallest ``sigma`` on a rational sweep where the named case fails."""
    stop = exponent_parameters(d).sigma_max + 2 if stop is None else _frac(stop)
    sg = _frac(start)
    while sg <= stop:
        for c, rep in builtin_cases(d, sg):
            if c.name == case and not rep.valid:
                return sg
        sg += step
    return None


# --- empirical ratios ------------------------------------------------------

def besov_any_q(grid: Grid, coeffs: np.ndarray, a: float, b: float, q: float) -> float:
    """``B^{a,b}_q`` for any ``q >= 1`` (the dual exponents below 2 included)."""
    chi = cutoff_chi(grid.kmag)
    return homogeneous_blocks_norm(grid, chi * coeffs, a, q) + homogeneous_blocks_norm(grid, (1 - chi) * coeffs, b, q)


def trilinear_ratio(f: SpectralField, g: SpectralField, h: SpectralField, case: EstimateCase) -> float:
    """``|int f g h| / prod ||.||_{B^{s_a,t_a}_{p_a}}`` by lattice quadrature."""
    rep = check_conditions(case)
    if not rep.valid:
        raise ValueError(f"case {case.name} violates {rep.failed()}")
    grid = f.grid
    integral = abs(np.sum(f.physical() * g.physical() * h.physical()) * grid.cell_volume)
    den = 1.0
    for fld, (s, t, p) in zip((f, g, h), case.norm_specs()):
        den *= besov_any_q(grid, fld.coefficients(), s, t, p)
    if den == 0.0:
        return 0.0 if integral == 0.0 else math.inf
    return float(integral / den)


def spread_profile(grid: Grid, scales: int, top: float | None = None):
    """Indicator of ``top / 2^scales < |xi| <= top``, kept where the lattice sum of three frequencies cannot wrap."""
    safe = grid.dealias_mask("2/3")
    top = float(grid.kmag[safe.astype(bool)].max()) if top is None else top
    lo = top / 2.0**scales

    def prof(r):
        return ((r > lo) & (r <= top)).astype(float) * safe

    return prof


def random_triple(grid: Grid, scales: int, rng: np.random.Generator, aligned: bool = False):
    """Three fields with band ``spread_profile(scales)``; ``aligned`` makes ``h`` match ``conj(f g)``."""
    prof = spread_profile(grid, scales)(grid.kmag)

    def one():
        c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * prof
        c *= (grid.kmag + grid.dxi) ** rng.uniform(-2, 2)
        return SpectralField(grid, c, rep="frequency").to_physical()

    f, g = one(), one()
    if aligned:
        hc = fft(grid, np.conj(f.physical() * g.physical())) * prof
        h = SpectralField(grid, hc, rep="frequency").to_physical()
    else:
        h = one()
    return f, g, h


@dataclass
class TrilinearSuite:
    sigma: float
    trials: int
    max_ratio: dict[tuple[str, int], float] = field(default_factory=dict)

    def growth(self, case: str, lo: int, hi: int) -> float:
        a, b = self.max_ratio[(case, lo)], self.max_ratio[(case, hi)]
        return b / a if a > 0 else math.inf

    def rows(self) -> list[tuple[str, int, float]]:
        return [(c, m, r) for (c, m), r in sorted(self.max_ratio.items())]


def trilinear_suite(grid: Grid, sigma=0, trials: int = 200, seed: int = 0, spreads=(2, 4)) -> TrilinearSuite:
    """Max ratio over seeded trials (half random, half aligned) for each case and spread."""
    cases = [c for c, rep in builtin_cases(grid.d, sigma) if rep.valid]
    out = TrilinearSuite(float(sigma), trials)
    for m in spreads:
        rng = np.random.default_rng([seed, m])
        best = {c.name: 0.0 for c in cases}
        for n in range(trials):
            f, g, h = random_triple(grid, m, rng, aligned=bool(n % 2))
            for c in cases:
                best[c.name] = max(best[c.name], trilinear_ratio(f, g, h, c))
        for name, r in best.items():
            out.max_ratio[(name, m)] = r
    return out


# --- quadratic and cubic estimates on free trajectories --------------------

@dataclass
class RatioReport:
    names: tuple[str, ...]
    ratios: dict[str, list[float]]

    def max(self, name: str) -> float:
        return max(self.ratios[name], default=0.0)

    def to_json(self) -> dict:
        return {n: {"max": self.max(n), "ratios": self.ratios[n]} for n in self.names}


def _free_trajectory(grid: Grid, v0c: np.ndarray, times) -> list[np.ndarray]:
    return [ifft(grid, from_v_coeffs(grid, propagate_coeffs(grid, v0c, t))) for t in times]


def quadratic_cubic_ratio_suite(
    d: int = 4,
    sigma=0.0,
    trials: int = 10,
    seed: int = 0,
    N: int = 12,
    L: float = 6 * math.pi,
    T: float = 4.0,
    samples: int = 9,
) -> RatioReport:
    """Measured ratios for the quadratic, cubic and gradient-term product estimates.

    ``u(t) = V e^{-iHt} v0`` for random band-limited ``v0``; time norms by the
    trapezoid rule on ``samples`` points of ``[0, T]``.
    """
    if trials < 10:
        raise ValueError(f"need at least 10 trials, got {trials}")
    pp = exponent_parameters(d)
    b, s, p = float(pp.b), float(pp.s), float(pp.p)
    pd = p / (p - 1)
    sg = float(sigma)
    grid = Grid(d, N, L)
    times = np.linspace(0.0, T, samples)
    dt = times[1] - times[0]
    prof = spread_profile(grid, 3)(grid.kmag)
    rng = np.random.default_rng(seed)
    names = ("quadratic", "cubic", "gradient")
    ratios = {n: [] for n in names}

    def B(vals, a, bb, q):
        return besov_any_q(grid, fft(grid, vals), a, bb, q)

    for _ in range(trials):
        v0c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * prof
        us = _free_trajectory(grid, v0c, times)
        sup_h = max(B(u, sg, s, 2.0) for u in us)
        sup_h1 = max(B(np.ascontiguousarray(u.real), sg - b, s, 2.0) for u in us)
        l2_p = spacetime_from_values([B(u, sg - b, s, p) for u in us], 2.0, dt)
        x0 = sup_h + l2_p
        quad = spacetime_from_values([B(u.real * u, sg + b, s, pd) for u in us], 2.0, dt)
        cub = spacetime_from_values([B(u**3, sg, s, pd) for u in us], 2.0, dt)
        grads = []
        for u in us:
            c = fft(grid, u)
            tot = 0.0
            for a in range(d):
                du = ifft(grid, grad(a).on(grid) * c)
                tot += B(apply_array(P, grid, u * du), sg + b, s, pd)
            grads.append(tot)
        gr = spacetime_from_values(grads, 2.0, dt)
        ratios["quadratic"].append(quad / (sup_h1 * l2_p) if sup_h1 * l2_p > 0 else 0.0)
        ratios["cubic"].append(cub / x0**3 if x0 > 0 else 0.0)
        ratios["gradient"].append(gr / x0**2 if x0 > 0 else 0.0)
    return RatioReport(names, ratios)
