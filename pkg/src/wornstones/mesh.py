"""Boundary-conforming quality triangulations of convex bodies.

Smooth bodies get a boundary loop on the curve itself: nodes are inverse Gauss
map points ``x(phi_j)`` spaced so that every edge is at most ``target_h`` long
and turns by at most ``MAX_TURN`` radians.  Polygons keep their vertices and
have long edges split uniformly.  Triangle runs with boundary Steiner points
disabled, so the loop is exactly what we put in.  A layer of interior nodes sits
at the apex of the equilateral triangle on each boundary edge; this makes the
boundary-adjacent elements regular and keeps the recovered normal flux smooth
from node to node.  Where the quality bound cannot be met with that loop (tight
curvature, strong grading), the boundary splits a free Triangle run would make
are mapped back onto the curve and the loop is enriched with them.  Centrally
symmetric bodies are meshed on one half and reflected through the origin, so the
mesh is invariant under ``x -> -x`` bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import triangle

from .errors import MeshFailure
from .geometry import (
    Body,
    ConvexPolygon,
    SupportFunction,
    boundary_point,
    diameter_bound,
    trig_evaluate,
)

MIN_ANGLE_DEG = 20.0
MAX_TURN = 0.15
MAX_ENRICH = 4
CORNER_TURN = 0.3
LAYER_OFFSET = np.sqrt(3.0) / 2.0
_FINE = 16


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Conforming P1 mesh of a convex body.

    ``boundary`` lists the boundary loop counterclockwise.  For smooth bodies
    ``boundary_angle[j]`` is the outer normal angle at ``boundary[j]`` (the node
    is the inverse Gauss map point of that angle); it is ``None`` for polygons.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    boundary_angle: Optional[np.ndarray] = None
    symmetric: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.column_stack([self.boundary, np.roll(self.boundary, -1)])

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def min_angle(self) -> float:
        return float(np.degrees(_triangle_angles(self.nodes, self.triangles).min()))

    def boundary_length(self) -> float:
        e = self.nodes[self.boundary_edges]
        return float(np.linalg.norm(e[:, 1] - e[:, 0], axis=1).sum())

    def to_json(self) -> str:
        edges = [{"nodes": [int(a), int(b)]} for a, b in self.boundary_edges]
        if self.boundary_angle is not None:
            for e, phi in zip(edges, self.boundary_angle):
                e["normal_angle"] = float(phi)
        return json.dumps(
            {"nodes": self.nodes.tolist(), "triangles": self.triangles.tolist(),
             "boundary_edges": edges}
        )


def _triangle_angles(nodes, tris):
    p = nodes[tris]
    out = []
    for i in range(3):
        a = p[:, (i + 1) % 3] - p[:, i]
        b = p[:, (i + 2) % 3] - p[:, i]
        cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        out.append(np.arccos(np.clip(cos, -1.0, 1.0)))
    return np.stack(out, axis=1)


def _subdivide(ring: np.ndarray, target_h: float) -> np.ndarray:
    """Split every ring edge into equal pieces no longer than ``target_h``."""
    pts = []
    nxt = np.roll(ring, -1, axis=0)
    for a, b in zip(ring, nxt):
        k = max(1, int(np.ceil(np.linalg.norm(b - a) / target_h)))
        pts.append(a + (b - a) * (np.arange(k) / k)[:, None])
    return np.vstack(pts)


def _boundary_layer(ring: np.ndarray, edges: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """Apexes of inward equilateral triangles on ``ring`` edges ``edges``.

    Apexes closer than a quarter edge to the boundary of the convex polygon
    ``inside`` are dropped, and so are apexes of edges ending at a corner that
    turns by more than ``CORNER_TURN`` (fixed apexes on both sides of such a corner
    pin a thin triangle between them).
    """
    a = ring[edges]
    b = ring[(edges + 1) % len(ring)]
    e = b - a
    length = np.linalg.norm(e, axis=1)
    inward = np.column_stack([-e[:, 1], e[:, 0]]) / length[:, None]
    pts = 0.5 * (a + b) + LAYER_OFFSET * length[:, None] * inward
    t = np.roll(ring, -1, axis=0) - ring
    heading = np.arctan2(t[:, 1], t[:, 0])
    turn = np.abs(np.angle(np.exp(1j * (heading - np.roll(heading, 1)))))  # at vertex i
    sharp = (turn[edges] > CORNER_TURN) | (turn[(edges + 1) % len(ring)] > CORNER_TURN)
    d = np.roll(inside, -1, axis=0) - inside
    d = d / np.linalg.norm(d, axis=1)[:, None]
    rel = pts[:, None, :] - inside[None, :, :]
    dist = d[None, :, 0] * rel[..., 1] - d[None, :, 1] * rel[..., 0]
    keep = (dist.min(axis=1) > 0.25 * length) & ~sharp
    return pts[keep]


def _triangulate(vertices, target_h, min_angle, interior=None, fixed_boundary=True):
    n = len(vertices)
    segments = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    pts = vertices if interior is None else np.vstack([vertices, interior])
    max_area = np.sqrt(3.0) / 4.0 * target_h**2
    opts = f"pq{min_angle:g}a{np.format_float_positional(max_area, trim='-')}{'Y' if fixed_boundary else ''}Q"
    out = triangle.triangulate({"vertices": pts, "segments": segments}, opts)
    if len(out["vertices"]) < len(pts) or not np.array_equal(out["vertices"][: len(pts)], pts):
        raise MeshFailure("triangulator altered the input nodes")
    return out, len(pts)


def _run_triangle(vertices: np.ndarray, target_h: float, min_angle: float,
                  interior: Optional[np.ndarray] = None):
    out, _ = _triangulate(vertices, target_h, min_angle, interior)
    return out["vertices"], out["triangles"].astype(int)


def _boundary_splits(ring: np.ndarray, target_h: float, min_angle: float):
    """Segment index and fraction of every boundary node a free Triangle run adds."""
    layer = _boundary_layer(ring, np.arange(len(ring)), ring)
    out, n_in = _triangulate(ring, target_h, min_angle, layer, fixed_boundary=False)
    new = out["vertices"][n_in:][out["vertex_markers"].ravel()[n_in:] == 1]
    if not len(new):
        return np.zeros(0, dtype=int), np.zeros(0)
    a, e = ring, np.roll(ring, -1, axis=0) - ring
    rel = new[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pmi,mi->pm", rel, e) / np.einsum("mi,mi->m", e, e), 0.0, 1.0)
    gap = np.linalg.norm(rel - t[..., None] * e[None, :, :], axis=2)
    seg = np.argmin(gap, axis=1)
    return seg, t[np.arange(len(new)), seg]


def _enrich(body: Body, ring: np.ndarray, phi: Optional[np.ndarray], seg, frac, symmetric: bool):
    """Insert the given boundary splits (mirrored when ``symmetric``) into the loop."""
    m = len(ring)
    if symmetric:
        seg = seg % (m // 2)
        seg = np.r_[seg, seg + m // 2]
        frac = np.r_[frac, frac]
    key = np.sort(seg + np.clip(frac, 0.05, 0.95))
    # merge near-coincident splits so no edge collapses
    key = key[np.r_[True, np.diff(key) > 0.05]]
    seg = np.floor(key).astype(int)
    frac = key - seg
    order = np.argsort(np.r_[np.arange(m, dtype=float), key], kind="stable")
    if phi is None:
        e = np.roll(ring, -1, axis=0) - ring
        pts = ring[seg] + frac[:, None] * e[seg]
        return np.vstack([ring, pts])[order], None
    dphi = np.mod(np.roll(phi, -1) - phi, 2.0 * np.pi)
    new_phi = np.mod(phi[seg] + frac * dphi[seg], 2.0 * np.pi)
    phi = np.r_[phi, new_phi][order]
    if symmetric:
        half = len(phi) // 2
        phi[half:] = phi[:half] + np.pi
    return boundary_point(body, phi), phi


def boundary_angles(h: SupportFunction, target_h: float, max_turn: float = MAX_TURN) -> np.ndarray:
    """Normal angles of the boundary loop nodes of a smooth body.

    Nodes are equidistributed in ``\\int max(r / target_h, 1 / max_turn) dphi``,
    so edges are at most about ``target_h`` long and turn by at most
    ``max_turn``.  The count is even and ``phi_0 = 0``; for centrally symmetric
    bodies the second half is the first shifted by ``pi``.
    """
    n = h.n_angles
    m = _FINE * n
    phi = 2.0 * np.pi * np.arange(m + 1) / m
    r = trig_evaluate(h.values, phi) + trig_evaluate(h.values, phi, derivative=2)
    dens = np.maximum(np.maximum(r, 0.0) / target_h, 1.0 / max_turn)
    tau = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(phi))])
    k = int(np.ceil(tau[-1]))
    k += k % 2
    if h.is_centrally_symmetric():
        half = np.interp(tau[m // 2] * np.arange(k // 2) / (k // 2), tau[: m // 2 + 1],
                         phi[: m // 2 + 1])
        return np.concatenate([half, half + np.pi])
    return np.interp(tau[-1] * np.arange(k) / k, tau, phi)


def _body_ring(body: Body, target_h: float):
    """Boundary loop (and normal angles for smooth bodies)."""
    if isinstance(body, ConvexPolygon):
        return _subdivide(np.array(body.vertices), target_h), None
    phi = boundary_angles(body, target_h)
    return boundary_point(body, phi), phi


def _is_point_symmetric(ring: np.ndarray) -> bool:
    m = len(ring)
    if m % 2:
        return False
    scale = np.max(np.abs(ring))
    return bool(np.max(np.abs(ring + np.roll(ring, -m // 2, axis=0))) <= 1e-9 * scale)


def _diameter_params(radius, end_h, target_h, growth=1.2):
    """Parameters in [-1, 1] of diameter nodes, graded from ``end_h`` at both ends.

    The list is antisymmetric, so ``s[k - j] == -s[j]`` exactly.
    """
    steps = []
    step, total = min(end_h, target_h), 0.0
    while total + step < radius - 0.5 * target_h:
        steps.append(step)
        total += step
        step = min(step * growth, target_h)
    tail = radius - total
    n_mid = max(1, int(np.ceil(tail / target_h)))
    offsets = np.r_[0.0, np.cumsum(steps), total + tail * np.arange(1, n_mid) / n_mid]
    left = offsets / radius - 1.0
    return np.r_[left, 0.0, -left[::-1]]


def _mesh_symmetric(ring, target_h, min_angle):
    m = len(ring)
    half = m // 2
    # put the diameter where it crosses the boundary most nearly at a right angle
    tangent = np.roll(ring, -1, axis=0) - np.roll(ring, 1, axis=0)
    cross = ring[:, 0] * tangent[:, 1] - ring[:, 1] * tangent[:, 0]
    sine = np.abs(cross) / (np.linalg.norm(ring, axis=1) * np.linalg.norm(tangent, axis=1))
    shift = int(np.argmax(sine[:half]))
    ring = np.roll(ring, -shift, axis=0)
    ring[half:] = -ring[:half]
    x0 = ring[0]
    s = _diameter_params(np.linalg.norm(x0), np.linalg.norm(ring[1] - ring[0]), target_h)
    k = len(s) - 1
    # diameter from -x0 (ring[half]) to x0 (ring[0]); s_j are exact negatives of each other
    diam = x0[None, :] * s[:, None]
    poly = np.vstack([ring[: half + 1], diam[1:-1]])
    layer = _boundary_layer(ring, np.arange(half), poly)
    nodes_h, tris_h = _run_triangle(poly, target_h, min_angle, layer)

    n_h = len(nodes_h)
    # diameter nodes of the half mesh: ring[0] (s=+1), ring[half] (s=-1), interior s_j
    diam_index = {k: 0, 0: half}
    for j in range(1, k):
        diam_index[j] = half + j
    mirror = np.arange(n_h) + n_h
    for j, idx in diam_index.items():
        mirror[idx] = diam_index[k - j]
    keep = np.ones(n_h, dtype=bool)
    keep[list(diam_index.values())] = False
    new_ids = np.cumsum(keep) - 1 + n_h
    mirror[keep] = new_ids[keep]
    nodes = np.vstack([nodes_h, -nodes_h[keep]])
    tris = np.vstack([tris_h, mirror[tris_h]])
    # full loop: ring[0..half] then the reflections of ring[1..half-1]
    boundary = np.concatenate([np.arange(half + 1), mirror[np.arange(1, half)]])
    return nodes, tris, np.roll(boundary, shift)


def mesh_body(body: Body, target_h: float, symmetric: Optional[bool] = None,
              min_angle: float = MIN_ANGLE_DEG) -> TriangleMesh:
    """Quality Delaunay mesh of ``body`` with element size about ``target_h``.

    Parameters
    ----------
    body : SupportFunction or ConvexPolygon
    target_h : float
        Target edge length; must not exceed ``diameter / 8``.
    symmetric : bool, optional
        Force (True) or forbid (False) the reflected half-mesh construction.  By
        default it is used whenever the boundary loop is centrally symmetric.
    min_angle : float
        Minimum triangle angle in degrees, enforced after meshing.
    """
    diam = diameter_bound(body)
    if not target_h > 0 or target_h > diam / 8.0:
        raise MeshFailure(f"target_h={target_h!r} must lie in (0, diameter/8 = {diam / 8:.4g}]")
    ring, phi = _body_ring(body, target_h)
    if symmetric is None:
        symmetric = _is_point_symmetric(ring)
    elif symmetric and not _is_point_symmetric(ring):
        raise MeshFailure("symmetric meshing requested for a non-symmetric body")
    for _ in range(MAX_ENRICH + 1):
        if symmetric:
            nodes, tris, boundary = _mesh_symmetric(ring, target_h, min_angle)
        else:
            layer = _boundary_layer(ring, np.arange(len(ring)), ring)
            nodes, tris = _run_triangle(ring, target_h, min_angle, layer)
            boundary = np.arange(len(ring))
        mesh = TriangleMesh(nodes, tris, boundary, phi, symmetric=bool(symmetric))
        if mesh.min_angle() >= min_angle - 1e-6:
            break
        seg, frac = _boundary_splits(ring, target_h, min_angle)
        if not len(seg):
            break
        ring, phi = _enrich(body, ring, phi, seg, frac, bool(symmetric))
    if np.any(mesh.areas() <= 0.0):
        raise MeshFailure("mesh has inverted or degenerate triangles")
    if mesh.min_angle() < min_angle - 1e-6:
        raise MeshFailure(f"min angle {mesh.min_angle():.2f} deg below {min_angle} deg")
    return mesh
