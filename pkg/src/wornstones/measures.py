"""Finite Borel measures on the unit circle attached to a convex body.

Densities are taken with respect to the angle ``theta`` (not arc length), so
every integral over the circle is a plain periodic quadrature.  Polygons give
purely atomic measures, one atom per side at its outer normal.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import AtomsPresent, GridMismatch, OriginOutside, UncertifiedTrace
from .geometry import AngleGrid, Body, ConvexPolygon, SupportFunction, trig_evaluate
from .pde import EIGENVALUE, TORSION, BoundaryTrace, ball_oracle

WEAK_STAR_DEGREE = 8


@dataclass(frozen=True, eq=False)
class SphereMeasure:
    """Measure ``density(theta) dtheta + sum_j mass_j delta_{angle_j}``.

    Parameters
    ----------
    grid : AngleGrid
    density : ndarray
        Nonnegative density per unit angle at the grid points.
    atoms : tuple of ndarray, optional
        ``(angles, masses)`` of point masses; masses must be positive.
    """

    grid: AngleGrid
    density: np.ndarray
    atoms: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        d = np.array(self.density, dtype=float)
        if d.shape != (self.grid.n_angles,):
            raise GridMismatch(f"density has shape {d.shape}, grid has {self.grid.n_angles} angles")
        if np.any(d < 0.0):
            raise ValueError("measure density must be nonnegative")
        d.setflags(write=False)
        object.__setattr__(self, "density", d)
        if self.atoms is not None:
            ang = np.mod(np.asarray(self.atoms[0], dtype=float), 2.0 * np.pi)
            mass = np.asarray(self.atoms[1], dtype=float)
            if ang.shape != mass.shape or np.any(mass <= 0.0):
                raise ValueError("atoms need matching angle/mass arrays with positive masses")
            object.__setattr__(self, "atoms", (ang, mass))

    @property
    def has_atoms(self) -> bool:
        return self.atoms is not None and self.atoms[1].size > 0

    @property
    def theta(self) -> np.ndarray:
        return self.grid.theta

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        total = float(np.sum(f(self.theta) * self.density)) * self.grid.dtheta
        if self.has_atoms:
            total += float(np.sum(f(self.atoms[0]) * self.atoms[1]))
        return total

    @property
    def total_variation(self) -> float:
        return self.integrate(np.ones_like)

    def scaled(self, c: float) -> "SphereMeasure":
        atoms = None if self.atoms is None else (self.atoms[0], c * self.atoms[1])
        return SphereMeasure(self.grid, c * self.density, atoms)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "density"])
            for t, d in zip(self.theta, self.density):
                w.writerow([repr(float(t)), repr(float(d))])

    def sidecar(self) -> dict:
        ang, mass = self.atoms if self.has_atoms else (np.zeros(0), np.zeros(0))
        return {
            "n_angles": self.grid.n_angles,
            "total_variation": self.total_variation,
            "atoms": [{"angle": float(a), "mass": float(m)} for a, m in zip(ang, mass)],
        }

    def dump(self, stem) -> Tuple[Path, Path]:
        """Write ``<stem>.csv`` (densities) and ``<stem>.json`` (atoms, total)."""
        stem = Path(stem)
        csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
        self.to_csv(csv_path)
        json_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def _atomic(grid: AngleGrid, angles, masses) -> SphereMeasure:
    return SphereMeasure(grid, np.zeros(grid.n_angles), (np.asarray(angles), np.asarray(masses)))


def surface_area_measure(body: Body, grid: AngleGrid = AngleGrid()) -> SphereMeasure:
    """``S_K``: density ``h + h''`` for smooth bodies, edge-length atoms for polygons."""
    if isinstance(body, ConvexPolygon):
        return _atomic(grid, body.normal_angles, body.edge_lengths)
    return SphereMeasure(body.grid, body.check_convex())


def cone_volume_measure(body: Body, grid: AngleGrid = AngleGrid()) -> SphereMeasure:
    """``V_K = h S_K``; its total mass is twice the area."""
    if isinstance(body, ConvexPolygon):
        if not body.contains_origin():
            raise OriginOutside("cone volumes need the origin inside the polygon")
        return _atomic(grid, body.normal_angles, body.edge_supports * body.edge_lengths)
    return SphereMeasure(body.grid, body.values * body.check_convex())


def first_variation_measure(trace: BoundaryTrace) -> SphereMeasure:
    """``mu_K``: push-forward of ``|grad u|^2 dH^1`` through the Gauss map.

    Raises
    ------
    UncertifiedTrace
        If the trace fails the Pohozaev gate.
    """
    if not trace.certified:
        raise UncertifiedTrace(
            f"Pohozaev residual {trace.pohozaev_residual:.3e} exceeds the certification gate"
        )
    if trace.smooth:
        grid = AngleGrid(trace.n_angles)
        return SphereMeasure(grid, trace.grad2 * trace.weight / grid.dtheta)
    sides = np.unique(trace.side)
    mass = np.array([np.sum((trace.grad2 * trace.weight)[trace.side == s]) for s in sides])
    # atom at the exact side normal, which every edge sample of that side shares
    angles = np.array([trace.theta[trace.side == s][0] for s in sides])
    return _atomic(AngleGrid(), angles, mass)


def cone_energy_measure(body: Body, mu: SphereMeasure) -> SphereMeasure:
    """``h mu``: the cone torsion (or eigenvalue) measure built from ``mu``."""
    if isinstance(body, SupportFunction):
        if body.n_angles != mu.grid.n_angles:
            raise GridMismatch(f"body grid {body.n_angles} != measure grid {mu.grid.n_angles}")
        h_atoms = (lambda a: trig_evaluate(body.values, a))
        density = body.values * mu.density
    else:
        h_atoms = body.support
        density = body.support(mu.theta) * mu.density
    atoms = None
    if mu.has_atoms:
        atoms = (mu.atoms[0], h_atoms(mu.atoms[0]) * mu.atoms[1])
    return SphereMeasure(mu.grid, density, atoms)


def ball_cone_measure(radius: float, functional: str, grid: AngleGrid = AngleGrid()) -> SphereMeasure:
    """Cone measure of the disk of the given radius from its closed-form ground state."""
    if functional not in (TORSION, EIGENVALUE):
        raise ValueError(f"no planar ball oracle for {functional!r}")
    oracle = ball_oracle(2, radius)
    g = oracle.grad2_torsion if functional == TORSION else oracle.grad2_eigenvalue
    return SphereMeasure(grid, np.full(grid.n_angles, g * radius**2))


def constant_density_deficit(m: SphereMeasure) -> float:
    """``(max - min) / mean`` of the density; zero iff the measure is uniform."""
    if m.has_atoms:
        raise AtomsPresent("density deficit is undefined for measures with atoms")
    d = m.density
    return float((d.max() - d.min()) / d.mean())


def log_minkowski_objective(K: SupportFunction, tau_K: SphereMeasure, L: Body, F_K: float) -> float:
    """``(1 / F_K) \\int log h_L d tau_K``."""
    if not F_K > 0:
        raise ValueError("energy must be positive")
    if K.n_angles != tau_K.grid.n_angles:
        raise GridMismatch(f"body grid {K.n_angles} != measure grid {tau_K.grid.n_angles}")
    if isinstance(L, SupportFunction):
        if L.n_angles != K.n_angles:
            raise GridMismatch(f"L grid {L.n_angles} != K grid {K.n_angles}")
        h_l = (lambda a: trig_evaluate(L.values, a))  # noqa: E731
    else:
        h_l = L.support
    log_h = lambda a: _safe_log(h_l(a))  # noqa: E731
    return tau_K.integrate(log_h) / F_K


def _safe_log(v: np.ndarray) -> np.ndarray:
    if np.any(v <= 0.0):
        raise OriginOutside("log of a nonpositive support value")
    return np.log(v)


def _dictionary(degree: int = WEAK_STAR_DEGREE):
    funcs = [np.ones_like]
    for k in range(1, degree + 1):
        funcs.append(lambda t, k=k: np.cos(k * t))
        funcs.append(lambda t, k=k: np.sin(k * t))
    return funcs


def weak_star_distance(m1: SphereMeasure, m2: SphereMeasure, degree: int = WEAK_STAR_DEGREE) -> float:
    """Largest discrepancy over trigonometric test functions of degree at most ``degree``."""
    if m1.grid.n_angles != m2.grid.n_angles:
        raise GridMismatch(f"measure grids differ: {m1.grid.n_angles} vs {m2.grid.n_angles}")
    return max(abs(m1.integrate(f) - m2.integrate(f)) for f in _dictionary(degree))
