"""Numerics for the half-wave maps equation ``du/dt = u x |nabla| u`` into the unit sphere."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, HWMError, InterpolationError, ResolutionError
from .grid import Grid1D, ScalarField, SphereField, VectorField3, apply_multiplier, hwm_rhs, make_grid

__all__ = [
    "ConvergenceError",
    "DomainError",
    "Grid1D",
    "HWMError",
    "InterpolationError",
    "ResolutionError",
    "ScalarField",
    "SphereField",
    "VectorField3",
    "apply_multiplier",
    "hwm_rhs",
    "make_grid",
]
