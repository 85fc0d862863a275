"""WKB approximate solutions, spectral solvers and norm-inflation experiments
for the semiclassical KdV and KP equations on the torus."""

__version__ = "0.1.0"

from .errors import ConfigError, GridError, NumericalFailure, StructureError, WkbLabError
from .profiles import Profile
from .spectral import NormSpec, SpectralField, TorusGrid1D, TorusGrid2D, make_grid, norm

__all__ = [
    "ConfigError",
    "GridError",
    "NormSpec",
    "NumericalFailure",
    "Profile",
    "SpectralField",
    "StructureError",
    "TorusGrid1D",
    "TorusGrid2D",
    "WkbLabError",
    "__version__",
    "make_grid",
    "norm",
]
