"""Chemotaxis-fluid simulator with a priori estimate diagnostics.

A staggered-grid finite volume solver for a saturated-sensitivity
chemotaxis system coupled to incompressible (Navier-)Stokes flow, plus
exact rational certificates for the exponent arithmetic the boundedness
analysis depends on. Hot solver kernels run on a compiled core with a
NumPy fallback, selected at import.
"""

from ._kernels import backend_name as kernel_backend
from .errors import (
    CFLError,
    ConfigError,
    DomainError,
    KsnsError,
    NumericsError,
    StateError,
)
from .grid import GridSpec, ScalarField, VectorField
from .regularization import CutoffSpec, ModelParams, PotentialSpec
from .state import SimState

__version__ = "0.1.0"

__all__ = [
    "CFLError",
    "ConfigError",
    "CutoffSpec",
    "DomainError",
    "GridSpec",
    "KsnsError",
    "ModelParams",
    "NumericsError",
    "PotentialSpec",
    "ScalarField",
    "SimState",
    "StateError",
    "VectorField",
    "kernel_backend",
    "__version__",
]
