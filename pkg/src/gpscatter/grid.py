"""Periodic spectral grids and complex fields living on them.

Frequencies are angular, ``xi_k = 2*pi*k/L`` with ``k`` in ``{-N/2, ..., N/2-1}``
per axis, stored in FFT order.  Frequency-side arrays hold Fourier-series
coefficients ``c_k`` with ``u(x) = sum_k c_k exp(i xi_k . x)``, so that

    ||u||_{L^2}^2 = (L/N)^d * sum_x |u(x)|^2 = L^d * sum_k |c_k|^2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Literal

import numpy as np
import scipy.fft as sfft

FRAMES = ("u", "v", "w", "z")
REPS = ("physical", "frequency")
Direction = Literal["forward", "inverse"]

SNAPSHOT_MAGIC = b"GPSF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdBB")


class RepresentationError(ValueError):
    """A field was handed to an operation in the wrong representation."""


def _is_smooth(n: int) -> bool:
    for p in (2, 3, 5):
        while n % p == 0:
            n //= p
    return n == 1


@dataclass(frozen=True)
class Grid:
    """Periodic box ``[0, L)^d`` sampled with ``N`` points per axis."""

    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3, 4):
            raise ValueError(f"dimension must be in 1..4, got {self.d}")
        if self.N < 8 or self.N % 2 or not _is_smooth(self.N):
            raise ValueError(
                f"N must be an even 5-smooth integer >= 8 (powers of two preferred), got {self.N}"
            )
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def dxi(self) -> float:
        """Smallest nonzero frequency magnitude."""
        return 2 * np.pi / self.L

    @property
    def xi_max(self) -> float:
        return np.pi * self.N * np.sqrt(self.d) / self.L

    @cached_property
    def k1d(self) -> np.ndarray:
        """Integer wavenumbers in FFT order (Nyquist stored as -N/2)."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Per-axis angular frequencies, shaped for broadcasting."""
        base = 2 * np.pi * self.k1d / self.L
        out = []
        for a in range(self.d):
            shape = [1] * self.d
            shape[a] = self.N
            out.append(base.reshape(shape))
        return tuple(out)

    @cached_property
    def kmag(self) -> np.ndarray:
        """|xi| on the full lattice."""
        sq = sum(x**2 for x in self.xi)
        out = np.sqrt(np.broadcast_to(sq, self.shape)).copy()
        out.setflags(write=False)
        return out

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        base = np.arange(self.N) * self.dx
        out = []
        for a in range(self.d):
            shape = [1] * self.d
            shape[a] = self.N
            out.append(base.reshape(shape))
        return tuple(out)

    def dealias_mask(self, rule: str = "2/3") -> np.ndarray:
        """Boolean mask of kept modes.

        ``"2/3"`` keeps ``|k_a| < N/3`` (quadratic products alias only onto
        discarded modes), ``"1/2"`` keeps ``|k_a| < N/4`` (quadratic products
        are exact).  The Nyquist row is dropped by both.
        """
        return _mask(self, rule)

    def negate(self, coeffs: np.ndarray) -> np.ndarray:
        """Return ``c[-k]`` on the lattice; the Nyquist row is its own partner."""
        axes = tuple(range(self.d))
        return np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)


_MASK_CACHE: dict = {}


def _mask(grid: Grid, rule: str) -> np.ndarray:
    key = (grid, rule)
    if key not in _MASK_CACHE:
        if rule == "2/3":
            cut = grid.N / 3
        elif rule == "1/2":
            cut = grid.N / 4
        else:
            raise ValueError(f"unknown dealiasing rule {rule!r}")
        keep1 = np.abs(grid.k1d) < cut
        m = np.ones(grid.shape, dtype=bool)
        for a in range(grid.d):
            shape = [1] * grid.d
            shape[a] = grid.N
            m = m & keep1.reshape(shape)
        m.setflags(write=False)
        _MASK_CACHE[key] = m
    return _MASK_CACHE[key]


def make_grid(d: int, N: int, L: float) -> Grid:
    return Grid(int(d), int(N), float(L))


def fft(grid: Grid, values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, axes=tuple(range(grid.d)), norm="forward")


def ifft(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifftn(coeffs, axes=tuple(range(grid.d)), norm="forward")


@dataclass(frozen=True)
class SpectralField:
    """Complex state on a grid.

    ``frame`` is a role marker only (u, v, w or z); ``rep`` says whether
    ``values`` holds physical samples or Fourier coefficients.
    """

    grid: Grid
    values: np.ndarray = dc_field(repr=False)
    frame: str = "u"
    rep: str = "physical"
    real: bool = False

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.rep not in REPS:
            raise ValueError(f"unknown representation {self.rep!r}")
        arr = np.array(self.values, dtype=complex)
        if arr.shape != self.grid.shape:
            raise ValueError(f"values have shape {arr.shape}, grid expects {self.grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def replace(self, values=None, **kw) -> SpectralField:
        return SpectralField(
            self.grid,
            self.values if values is None else values,
            kw.get("frame", self.frame),
            kw.get("rep", self.rep),
            kw.get("real", self.real),
        )

    def physical(self) -> np.ndarray:
        if self.rep == "physical":
            return self.values
        return ifft(self.grid, self.values)

    def coefficients(self) -> np.ndarray:
        if self.rep == "frequency":
            return self.values
        return fft(self.grid, self.values)

    def to_physical(self) -> SpectralField:
        return self if self.rep == "physical" else transform(self, "inverse")

    def to_frequency(self) -> SpectralField:
        return self if self.rep == "frequency" else transform(self, "forward")

    def mean(self) -> complex:
        if self.rep == "frequency":
            return complex(self.values.flat[0])
        return complex(self.values.mean())

    def l2_norm(self) -> float:
        return l2_norm(self)

    def __add__(self, other: SpectralField) -> SpectralField:
        return self.replace(self.values + _aligned(self, other))

    def __sub__(self, other: SpectralField) -> SpectralField:
        return self.replace(self.values - _aligned(self, other))

    def __mul__(self, c) -> SpectralField:
        return self.replace(self.values * c, real=self.real and np.isreal(c))

    __rmul__ = __mul__


def _aligned(a: SpectralField, b: SpectralField) -> np.ndarray:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return b.values if b.rep == a.rep else (b.physical() if a.rep == "physical" else b.coefficients())


def transform(field: SpectralField, direction: Direction) -> SpectralField:
    """Forward (physical -> coefficients) or inverse DFT of a field."""
    if direction == "forward":
        if field.rep != "physical":
            raise RepresentationError("forward transform needs a physical-space field")
        return field.replace(fft(field.grid, field.values), rep="frequency")
    if direction == "inverse":
        if field.rep != "frequency":
            raise RepresentationError("inverse transform needs a frequency-space field")
        vals = ifft(field.grid, field.values)
        if field.real:
            vals = vals.real
        return field.replace(vals, rep="physical")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def l2_norm(field: SpectralField) -> float:
    g = field.grid
    if field.rep == "physical":
        return float(np.sqrt(np.sum(np.abs(field.values) ** 2) * g.cell_volume))
    return float(np.sqrt(np.sum(np.abs(field.values) ** 2) * g.volume))


def random_coefficients(
    grid: Grid, profile: Callable[[np.ndarray], np.ndarray], rng: np.random.Generator
) -> np.ndarray:
    env = np.broadcast_to(np.asarray(profile(grid.kmag), dtype=float), grid.shape)
    if not np.all(np.isfinite(env)):
        raise ValueError("profile must be finite on the lattice")
    z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return env * z / np.sqrt(2)


def random_field(
    grid: Grid,
    profile: Callable[[np.ndarray], np.ndarray],
    seed: int,
    *,
    real: bool = False,
    frame: str = "u",
) -> SpectralField:
    """Field with independent complex Gaussian coefficients scaled by ``profile(|xi|)``.

    With ``real=True`` the physical real part is kept, which makes the
    coefficients Hermitian symmetric.
    """
    rng = np.random.default_rng(seed)
    vals = ifft(grid, random_coefficients(grid, profile, rng))
    if real:
        vals = vals.real
    return SpectralField(grid, vals, frame=frame, real=real)


def plane_wave(grid: Grid, k: tuple[int, ...], amplitude: complex = 1.0, frame: str = "u") -> SpectralField:
    """``amplitude * exp(i xi_k . x)`` for integer lattice index ``k``."""
    phase = sum(2 * np.pi * kk / grid.L * xx for kk, xx in zip(k, grid.x))
    return SpectralField(grid, np.broadcast_to(amplitude * np.exp(1j * phase), grid.shape), frame=frame)


def annulus(lo: float, hi: float) -> Callable[[np.ndarray], np.ndarray]:
    """Indicator profile of ``lo <= |xi| <= hi``."""
    return lambda r: ((r >= lo) & (r <= hi)).astype(float)


# --- binary snapshots ------------------------------------------------------

def write_snapshot(path, field: SpectralField) -> None:
    g = field.grid
    header = _HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.d, g.N, g.L,
        FRAMES.index(field.frame), REPS.index(field.rep),
    )
    body = np.ascontiguousarray(field.values, dtype="<c16").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read_snapshot(path) -> SpectralField:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, d, N, L, frame, rep = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"not a field snapshot (magic {magic!r})")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    grid = Grid(d, N, L)
    vals = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    if vals.size != N**d:
        raise ValueError(f"snapshot body has {vals.size} values, expected {N**d}")
    return SpectralField(grid, vals.reshape(grid.shape), frame=FRAMES[frame], rep=REPS[rep])
