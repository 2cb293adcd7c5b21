"""Scattering diagnostics for the Gross-Pitaevskii equation linearized at the
constant-density vacuum ``psi = 1 + u``.

Modules: :mod:`grid` (lattice, FFT, snapshots), :mod:`multipliers`
(Fourier symbols and ``V``), :mod:`besov` (dyadic norms), :mod:`linear`
(free flow and dispersive decay), :mod:`radial` (radial 3D fields),
:mod:`normal_form` (nonlinear terms and ``M``), :mod:`evolve` (Strang solver,
scattering, wave operators), :mod:`estimates` (exponent algebra and product
estimates) and :mod:`cli`.
"""

__version__ = "0.1.0"

from .grid import Grid, SpectralField, make_grid, random_field  # noqa: E402
from .multipliers import ZeroModeState  # noqa: E402

__all__ = ["Grid", "SpectralField", "ZeroModeState", "make_grid", "random_field", "__version__"]
