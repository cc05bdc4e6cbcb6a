"""Approximate maximum independent set of connected objects in planar graphs."""

__version__ = "0.1.0"

from .dp import DpResult, approx_is  # noqa: E402
from .exact import exact_mis  # noqa: E402
from .instance import GraphObject, Instance, generate_grid, load, save, validate  # noqa: E402

__all__ = [
    "DpResult",
    "GraphObject",
    "Instance",
    "approx_is",
    "exact_mis",
    "generate_grid",
    "load",
    "save",
    "validate",
]
