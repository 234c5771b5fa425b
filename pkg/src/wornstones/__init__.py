"""Numerical toolkit for energy-weighted curvature flows of planar convex bodies.

Modules
-------
geometry
    Support functions, polygons, Minkowski and log-Minkowski combinations.
mesh
    Quality triangulations whose boundary loop lies on the curve.
pde
    P1 finite-element torsion and Dirichlet eigenvalue solvers, boundary traces.
measures
    Surface-area, cone-volume and first-variation measures on the circle.
inequalities
    Verifiers for the isoperimetric-type inequalities around torsion and ``lambda_1``.
flow
    The worn-stone flow with adaptive explicit Euler stepping.
bodies
    Named fixtures and the JSON body format.
cli
    Command-line entry point.
"""

from .errors import WornStonesError
from .geometry import AngleGrid, ConvexPolygon, SupportFunction

__all__ = ["AngleGrid", "ConvexPolygon", "SupportFunction", "WornStonesError"]
__version__ = "0.1.0"
