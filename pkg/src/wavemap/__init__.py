"""Radial wave maps into embedded targets: solver, gauge, weighted estimates."""
__version__ = "0.1.0"

from .errors import ConfigError, NumericalError, WavemapError
from .manifold import TargetManifold
from .grid import RadialGrid, build_grid
from .solver import Family, FieldState, evolve, init_state, step
from .estimates import EstimateParams

__all__ = [
    "__version__", "ConfigError", "NumericalError", "WavemapError", "TargetManifold",
    "RadialGrid", "build_grid", "Family", "FieldState", "evolve", "init_state", "step",
    "EstimateParams",
]
