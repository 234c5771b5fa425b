"""Planar convex bodies as sampled support functions.

A body is stored as ``h(theta_i)`` on the uniform grid ``theta_i = 2 pi i / N``.
Derivatives are spectral (trigonometric interpolation), so every quantity that
needs curvature is exact for band-limited ``h`` and spectrally accurate for
smooth ones.  Polygons are kept as vertex lists; they are the exact realization
used when a body has corners and spectral derivatives would ring.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .errors import (
    DegenerateIntersection,
    GridMismatch,
    NonConvex,
    OriginOutside,
)

DEFAULT_N_ANGLES = 256
CONVEX_EPS = 1e-10
SYMMETRY_RTOL = 1e-8


@dataclass(frozen=True)
class AngleGrid:
    n_angles: int = DEFAULT_N_ANGLES

    def __post_init__(self):
        n = self.n_angles
        if int(n) != n or n < 16 or n % 2:
            raise ValueError(f"n_angles must be an even integer >= 16, got {n!r}")

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_angles) / self.n_angles

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_angles

    def normals(self) -> np.ndarray:
        t = self.theta
        return np.column_stack([np.cos(t), np.sin(t)])


# --------------------------------------------------------------------------
# trigonometric interpolation helpers


def _coefficients(values: np.ndarray) -> np.ndarray:
    return np.fft.rfft(values) / values.size


def _spectral_derivative(values: np.ndarray, order: int) -> np.ndarray:
    n = values.size
    c = np.fft.rfft(values)
    k = np.arange(c.size)
    factor = (1j * k) ** order
    if order % 2:
        # the Nyquist cosine has zero odd derivatives on the grid
        factor[-1] = 0.0
    return np.fft.irfft(c * factor, n)


def trig_evaluate(values: np.ndarray, theta, derivative: int = 0) -> np.ndarray:
    """Evaluate the trigonometric interpolant of grid samples at arbitrary angles."""
    values = np.asarray(values, dtype=float)
    n = values.size
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    c = _coefficients(values)
    k = np.arange(c.size)
    weights = np.full(c.size, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0  # Nyquist, n even
    phase = np.exp(1j * np.outer(theta, k))
    deriv = (1j * k) ** derivative
    if derivative % 2:
        deriv[-1] = 0.0
    # the Nyquist coefficient is real, so taking the real part gives its cosine
    return (phase @ (c * weights * deriv)).real


def resample(h: "SupportFunction", n_angles: int) -> "SupportFunction":
    """Trigonometric interpolation of ``h`` onto a grid with ``n_angles`` points."""
    grid = AngleGrid(n_angles)
    return SupportFunction(trig_evaluate(h.values, grid.theta))


def lowpass(values: np.ndarray, cutoff: int) -> Tuple[np.ndarray, float]:
    """Zero Fourier modes above ``cutoff``; return filtered samples and removed L2 energy."""
    n = values.size
    c = np.fft.rfft(values)
    removed = np.zeros_like(c)
    removed[cutoff + 1:] = c[cutoff + 1:]
    c[cutoff + 1:] = 0.0
    tail = np.fft.irfft(removed, n)
    energy = float(np.sum(tail**2) * 2.0 * np.pi / n)
    return np.fft.irfft(c, n), energy


# --------------------------------------------------------------------------
# body types


@dataclass(frozen=True, eq=False)
class SupportFunction:
    """Support function samples ``h(theta_i) > 0`` on a uniform grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("support values must be a 1-D array")
        AngleGrid(v.size)
        if not np.all(np.isfinite(v)):
            raise ValueError("support values must be finite")
        if np.any(v <= 0.0):
            i = int(np.argmin(v))
            raise OriginOutside(f"h(theta_{i}) = {v[i]:.3e} <= 0: origin not interior")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def grid(self) -> AngleGrid:
        return AngleGrid(self.values.size)

    @property
    def n_angles(self) -> int:
        return self.values.size

    @property
    def theta(self) -> np.ndarray:
        return self.grid.theta

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.values.size

    def derivative(self, order: int = 1) -> np.ndarray:
        return _spectral_derivative(self.values, order)

    @property
    def radius(self) -> np.ndarray:
        return curvature_radius(self)

    def mean(self) -> float:
        return float(self.values.mean())

    def convexity_floor(self) -> float:
        return CONVEX_EPS * self.mean()

    def is_convex(self) -> bool:
        return bool(np.all(self.radius > self.convexity_floor()))

    def check_convex(self) -> np.ndarray:
        r = self.radius
        floor = self.convexity_floor()
        if np.any(r <= floor):
            i = int(np.argmin(r))
            raise NonConvex(
                f"h + h'' = {r[i]:.3e} at theta_{i} is below the convexity floor {floor:.1e}"
            )
        return r

    def symmetry_defect(self) -> float:
        v = self.values
        return float(np.max(np.abs(v - np.roll(v, v.size // 2))))

    def is_centrally_symmetric(self, rtol: float = SYMMETRY_RTOL) -> bool:
        return self.symmetry_defect() <= rtol * self.mean()

    def scaled(self, s: float) -> "SupportFunction":
        return SupportFunction(s * self.values)

    def translated(self, shift) -> "SupportFunction":
        """Support function of ``K + shift``."""
        sx, sy = shift
        t = self.theta
        return SupportFunction(self.values + sx * np.cos(t) + sy * np.sin(t))


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Counterclockwise, strictly convex vertex list."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("vertices must be an (m, 2) array with m >= 3")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = np.max(np.linalg.norm(e, axis=1)) ** 2
        if np.any(cross <= 1e-14 * scale):
            i = int(np.argmin(cross))
            raise NonConvex(f"vertex sequence not strictly convex/ccw at vertex {(i + 1) % len(v)}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=1)

    @property
    def edge_normals(self) -> np.ndarray:
        e = self.edges
        return np.column_stack([e[:, 1], -e[:, 0]]) / self.edge_lengths[:, None]

    @property
    def normal_angles(self) -> np.ndarray:
        n = self.edge_normals
        return np.mod(np.arctan2(n[:, 1], n[:, 0]), 2.0 * np.pi)

    @property
    def edge_supports(self) -> np.ndarray:
        """Distance from the origin to each edge line (``x . nu`` on the edge)."""
        return np.einsum("ij,ij->i", self.vertices, self.edge_normals)

    @property
    def area(self) -> float:
        x, y = self.vertices.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def centroid(self) -> np.ndarray:
        x, y = self.vertices.T
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        a = 0.5 * cr.sum()
        return np.array([np.sum((x + xn) * cr), np.sum((y + yn) * cr)]) / (6.0 * a)

    def support(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        xi = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return np.max(xi @ self.vertices.T, axis=-1)

    def contains_origin(self) -> bool:
        return bool(np.all(self.edge_supports > 0.0))

    def translated(self, shift) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices + np.asarray(shift, dtype=float))

    def scaled(self, s: float) -> "ConvexPolygon":
        return ConvexPolygon(s * self.vertices)

    def is_centrally_symmetric(self, rtol: float = SYMMETRY_RTOL) -> bool:
        v = self.vertices
        m = len(v)
        if m % 2:
            return False
        scale = np.max(np.abs(v))
        return bool(np.max(np.abs(v + np.roll(v, -m // 2, axis=0))) <= rtol * scale)


Body = Union[SupportFunction, ConvexPolygon]


@dataclass(frozen=True)
class BodySummary:
    volume: float
    centroid: Tuple[float, float]
    min_width: float
    diameter: float
    hausdorff_to_best_disk: float
    is_centrally_symmetric: bool


# --------------------------------------------------------------------------
# operations


def _same_grid(*hs: SupportFunction) -> None:
    n = {h.n_angles for h in hs}
    if len(n) != 1:
        raise GridMismatch(f"support functions live on different grids: {sorted(n)}")


def support_from_polygon(p: ConvexPolygon, grid: AngleGrid = AngleGrid()) -> SupportFunction:
    values = p.support(grid.theta)
    if np.any(values <= 0.0):
        raise OriginOutside("polygon does not contain the origin in its interior")
    return SupportFunction(values)


def as_support(body: Body, grid: AngleGrid = AngleGrid()) -> SupportFunction:
    if isinstance(body, SupportFunction):
        return body
    return support_from_polygon(body, grid)


def curvature_radius(h: SupportFunction) -> np.ndarray:
    """Radius of curvature ``h + h''`` at the grid angles (Gauss curvature is its inverse)."""
    return h.values + h.derivative(2)


def gauss_curvature(h: SupportFunction) -> np.ndarray:
    return 1.0 / h.check_convex()


def boundary_point(h: SupportFunction, theta) -> np.ndarray:
    """Inverse Gauss map: the boundary point with outward normal ``(cos t, sin t)``."""
    h.check_convex()
    theta = np.asarray(theta, dtype=float)
    t = np.atleast_1d(theta)
    hv = trig_evaluate(h.values, t)
    dh = trig_evaluate(h.values, t, derivative=1)
    c, s = np.cos(t), np.sin(t)
    pts = np.column_stack([hv * c - dh * s, hv * s + dh * c])
    return pts[0] if theta.ndim == 0 else pts


def _grid_boundary_points(h: SupportFunction) -> np.ndarray:
    t = h.theta
    hv, dh = h.values, h.derivative(1)
    c, s = np.cos(t), np.sin(t)
    return np.column_stack([hv * c - dh * s, hv * s + dh * c])


def _clean_ring(pts: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Drop repeated and collinear vertices from a ccw ring."""
    scale = np.max(np.abs(pts))
    keep = np.linalg.norm(pts - np.roll(pts, 1, axis=0), axis=1) > rtol * scale
    pts = pts[keep]
    while len(pts) > 3:
        a, b = np.roll(pts, 1, axis=0) - pts, np.roll(pts, -1, axis=0) - pts
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        flat = np.abs(cross) <= rtol * scale**2
        if not flat.any():
            break
        pts = pts[~flat]
    return pts


def wulff_polygon(bounds: np.ndarray) -> ConvexPolygon:
    """Polygon ``{x : x . xi_i <= bounds_i}`` cut out by the grid halfspaces."""
    bounds = np.asarray(bounds, dtype=float)
    if np.any(bounds <= 0.0):
        raise OriginOutside("halfspace bounds must be positive")
    normals = AngleGrid(bounds.size).normals()
    halfspaces = np.column_stack([normals, -bounds])
    try:
        hs = HalfspaceIntersection(halfspaces, np.zeros(2))
        hull = ConvexHull(hs.intersections)
    except Exception as exc:  # qhull raises its own error type
        raise DegenerateIntersection(f"halfspace intersection failed: {exc}") from exc
    pts = hs.intersections[hull.vertices]
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    pts = _clean_ring(pts[np.argsort(ang)])
    poly = ConvexPolygon(pts)
    if poly.area <= 1e-14 * float(np.mean(bounds)) ** 2:
        raise DegenerateIntersection("halfspace intersection has empty interior")
    return poly


def polygon_from_support(h: SupportFunction, method: str = "auto") -> ConvexPolygon:
    """Realize ``h`` as a polygon.

    ``method="spectral"`` places one vertex at ``boundary_point(h, theta_i)`` for
    every grid angle and raises :class:`NonConvex` if ``h + h''`` is not positive.
    ``method="wulff"`` intersects the grid halfspaces, which is exact for polygons
    whose edge normals lie on the grid and never rings at corners.  ``"auto"``
    uses the spectral route when ``h`` is discretely convex and Wulff otherwise.
    """
    if method not in ("auto", "spectral", "wulff"):
        raise ValueError(f"unknown method {method!r}")
    if method == "wulff" or (method == "auto" and not h.is_convex()):
        return wulff_polygon(h.values)
    h.check_convex()
    return ConvexPolygon(_grid_boundary_points(h))


def minkowski_sum(h1: SupportFunction, h2: SupportFunction) -> SupportFunction:
    _same_grid(h1, h2)
    return SupportFunction(h1.values + h2.values)


def log_minkowski_combination(h1: SupportFunction, h2: SupportFunction, lam: float) -> SupportFunction:
    """Support function of ``(1 - lam) . K +_0 lam . L`` on the grid."""
    _same_grid(h1, h2)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    if lam == 0.0:
        return h1
    if lam == 1.0:
        return h2
    bound = h1.values ** (1.0 - lam) * h2.values**lam
    poly = wulff_polygon(bound)
    values = np.minimum(poly.support(h1.theta), bound)
    return SupportFunction(values)


def volume(body: Body) -> float:
    if isinstance(body, ConvexPolygon):
        return body.area
    r = body.check_convex()
    return 0.5 * float(np.sum(body.values * r)) * body.dtheta


def perimeter(body: Body) -> float:
    if isinstance(body, ConvexPolygon):
        return body.perimeter
    return float(np.sum(body.check_convex())) * body.dtheta


def centroid(body: Body) -> np.ndarray:
    if isinstance(body, ConvexPolygon):
        return body.centroid
    r = body.check_convex()
    x = _grid_boundary_points(body)
    w = body.values * r * body.dtheta
    return (x * w[:, None]).sum(axis=0) / (1.5 * w.sum())


def min_width(body: Body) -> float:
    h = as_support(body)
    v = h.values
    return float(np.min(v + np.roll(v, v.size // 2)))


def diameter_bound(body: Body) -> float:
    """Maximal width over the grid directions (equals the diameter up to grid resolution)."""
    if isinstance(body, ConvexPolygon):
        d = body.vertices[:, None, :] - body.vertices[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())
    v = body.values
    return float(np.max(v + np.roll(v, v.size // 2)))


def hausdorff_distance(h1: SupportFunction, h2: SupportFunction) -> float:
    _same_grid(h1, h2)
    return float(np.max(np.abs(h1.values - h2.values)))


def distance_to_disk(h: SupportFunction) -> float:
    """Sup distance to the origin-centred disk of radius ``mean(h)``."""
    return float(np.max(np.abs(h.values - h.values.mean())))


def polar_volume(body: Body) -> float:
    """Area of the polar body, ``(1/2) \\oint h^{-2}``."""
    if isinstance(body, ConvexPolygon):
        if not body.contains_origin():
            raise OriginOutside("polar body undefined: origin not interior")
        # polar of a polygon is the polygon with vertices nu_i / h_i
        dual = body.edge_normals / body.edge_supports[:, None]
        return ConvexPolygon(dual).area
    return 0.5 * float(np.sum(body.values**-2.0)) * body.dtheta


def summarize(body: Body) -> BodySummary:
    h = as_support(body)
    c = centroid(body)
    sym = body.is_centrally_symmetric()
    return BodySummary(
        volume=volume(body),
        centroid=(float(c[0]), float(c[1])),
        min_width=min_width(h),
        diameter=diameter_bound(body),
        hausdorff_to_best_disk=distance_to_disk(h),
        is_centrally_symmetric=bool(sym),
    )


def centroid_and_center(body: Body):
    """Summary of ``body`` and the same body translated so its centroid is the origin."""
    summary = summarize(body)
    c = np.asarray(summary.centroid)
    return summary, body.translated(-c)
