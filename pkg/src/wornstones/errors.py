"""Exception hierarchy shared by all modules."""


class WornStonesError(Exception):
    """Base class for every error raised by the package."""


class GeometryError(WornStonesError):
    pass


class OriginOutside(GeometryError):
    """A support value is not strictly positive (origin not interior)."""


class NonConvex(GeometryError):
    """Discrete radius of curvature h + h'' fell below the convexity floor."""


class GridMismatch(GeometryError):
    pass


class DegenerateIntersection(GeometryError):
    pass


class SymmetryViolation(GeometryError):
    pass


class BodyFileError(WornStonesError):
    """Malformed body file; the message names the offending field or line."""


class MeshFailure(WornStonesError):
    pass


class SolverFailure(WornStonesError):
    pass


class NonConvergence(SolverFailure):
    pass


class HopfViolation(WornStonesError):
    """Recovered boundary |grad u|^2 is not strictly positive."""


class DimensionError(WornStonesError):
    pass


class UncertifiedTrace(WornStonesError):
    """Boundary trace failed the Pohozaev certification gate."""


class AtomsPresent(WornStonesError):
    pass


class StepFailure(WornStonesError):
    """Time stepping could not proceed; ``trace`` holds the partial run."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
