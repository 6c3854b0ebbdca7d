"""Hyperbolic grid distances and the discrete hyperbolic random graph model."""

from .hypgeom import (PolarCoord, ORIGIN, hyp_distance, polar_to_point,
                      point_to_polar, compose, inverse, renormalize,
                      step_isometries)
from .grid import Grid, GridSpec, GridVertex, grid_spec, new_grid
from .griddist import DistanceTallyCounter, grid_distance

__all__ = [
    "PolarCoord", "ORIGIN", "hyp_distance", "polar_to_point",
    "point_to_polar", "compose", "inverse", "renormalize", "step_isometries",
    "Grid", "GridSpec", "GridVertex", "grid_spec", "new_grid",
    "DistanceTallyCounter", "grid_distance",
]
