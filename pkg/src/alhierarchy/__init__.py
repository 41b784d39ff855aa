"""Numerical lab for the Ablowitz-Ladik hierarchy on a truncated lattice."""

from .errors import ALError, BlowupError, ConfigError, NumericalError
from .hierarchy import FlowSpec, al_r_rhs, homogeneous_coeffs
from .integrator import evolve
from .lattice import BoundaryMode, LatticeWindow, SequencePair, make_profile

__version__ = "0.1.0"

__all__ = [
    "ALError",
    "BlowupError",
    "BoundaryMode",
    "ConfigError",
    "FlowSpec",
    "LatticeWindow",
    "NumericalError",
    "SequencePair",
    "__version__",
    "al_r_rhs",
    "evolve",
    "homogeneous_coeffs",
    "make_profile",
]
