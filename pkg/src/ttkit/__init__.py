"""Toolkit for displacement functions of graph-of-groups automorphisms on Outer space.

The package computes stretching factors via candidate loops, runs the
piecewise-linear optimization flow on straight maps, analyses gates and
tension graphs, performs simple folds, minimizes displacement over
simplices by exact rational LP bisection, detects jumps at boundary
collapses, regenerates horoball points, and searches globally for
(partial) train tracks.
"""

from ttkit.policy import NumericPolicy, EXACT, float_policy, Scalar, parse_scalar, SQRT2, GOLDEN
from ttkit.graphs import MarkedGraph, Point, Subgraph, core
from ttkit.maps import StraightMap, FracPath, lip, stretch
from ttkit.displacement import (SimplexSpec, lambda_, min_in_simplex,
                                global_min_search)

__all__ = [
    "NumericPolicy",
    "EXACT",
    "float_policy",
    "Scalar",
    "parse_scalar",
    "SQRT2",
    "GOLDEN",
    "MarkedGraph",
    "Point",
    "Subgraph",
    "core",
    "StraightMap",
    "FracPath",
    "lip",
    "stretch",
    "SimplexSpec",
    "lambda_",
    "min_in_simplex",
    "global_min_search",
]

__version__ = "0.1.0"
