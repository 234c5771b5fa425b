"""Ground states on planar convex bodies and closed-form ball oracles.

P1 finite elements on a :class:`~wornstones.mesh.TriangleMesh`.  The boundary
normal derivative is recovered from the residual of the discrete equation on
boundary rows (the Galerkin flux): ``R_i = (K u - b)_i = \\int q phi_i ds``.
Dividing by the lumped boundary mass gives nodal values of ``q = du/dn``, and
since ``u = 0`` on the boundary, ``|grad u|^2 = q^2``.  This is conservative
(``sum_i R_i`` equals the exact flux of the discrete solution) and far more
accurate than raw element gradients next to the boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.sparse.linalg import splu
from scipy.special import gamma as gamma_fn
from scipy.special import jv

from .errors import DimensionError, HopfViolation, NonConvergence, SolverFailure
from .geometry import Body, ConvexPolygon, SupportFunction, as_support, lowpass
from .mesh import TriangleMesh, mesh_body

TORSION = "torsion"
EIGENVALUE = "eigenvalue"
FUNCTIONALS = (TORSION, EIGENVALUE)

# homogeneity degree under dilation, n = 2
ALPHA = {TORSION: 4, EIGENVALUE: -2}

POHOZAEV_GATE = 0.01
LINEAR_RTOL = 1e-12
REFINE_SWEEPS = 3



def homogeneity(functional: str, n: int = 2) -> int:
    return {TORSION: n + 2, EIGENVALUE: -2, "capacity": n - 2}[functional]


# --------------------------------------------------------------------------
# assembly


def assemble(mesh: TriangleMesh):
    """P1 stiffness and consistent mass matrices (CSR)."""
    p = mesh.nodes[mesh.triangles]
    area = mesh.areas()
    # gradients of barycentric coordinates
    d = np.stack([p[:, 1] - p[:, 2], p[:, 2] - p[:, 0], p[:, 0] - p[:, 1]], axis=1)
    grads = np.stack([-d[..., 1], d[..., 0]], axis=-1) / (2.0 * area)[:, None, None]
    kloc = np.einsum("tik,tjk->tij", grads, grads) * area[:, None, None]
    mloc = (np.ones((3, 3)) + np.eye(3))[None, :, :] * (area / 12.0)[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_nodes
    stiff = sparse.csr_matrix((kloc.ravel(), (rows, cols)), shape=(n, n))
    mass = sparse.csr_matrix((mloc.ravel(), (rows, cols)), shape=(n, n))
    return stiff, mass


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal P1 field with the data needed to recover its boundary flux."""

    mesh: TriangleMesh
    values: np.ndarray
    kind: str
    stiffness: sparse.csr_matrix = field(repr=False)
    mass: sparse.csr_matrix = field(repr=False)
    eigenvalue: Optional[float] = None
    residual: float = 0.0
    iterations: int = 0

    def integral(self) -> float:
        return float(self.mass @ self.values @ np.ones(self.mesh.n_nodes))

    def l2_norm(self) -> float:
        return float(np.sqrt(self.values @ (self.mass @ self.values)))

    def load(self) -> np.ndarray:
        if self.kind == TORSION:
            return self.mass @ np.ones(self.mesh.n_nodes)
        return self.eigenvalue * (self.mass @ self.values)

    def boundary_flux(self) -> np.ndarray:
        """Outward normal derivative at the boundary loop nodes."""
        mesh = self.mesh
        resid = self.stiffness @ self.values - self.load()
        b = mesh.boundary
        e = np.linalg.norm(mesh.nodes[np.roll(b, -1)] - mesh.nodes[b], axis=1)
        lumped = 0.5 * (e + np.roll(e, 1))
        return resid[b] / lumped

    def report(self) -> dict:
        out = {
            "kind": self.kind,
            "n_nodes": self.mesh.n_nodes,
            "n_triangles": len(self.mesh.triangles),
            "linear_residual": self.residual,
            "iterations": self.iterations,
        }
        if self.eigenvalue is not None:
            out["eigenvalue"] = self.eigenvalue
        return out


def _factor(a):
    try:
        return splu(a.tocsc())
    except RuntimeError as exc:
        raise SolverFailure(f"sparse factorization failed: {exc}") from exc


def _backward_error(a, x, b) -> float:
    """Normwise relative backward error ``|b - A x| / (|A| |x| + |b|)`` in the inf-norm."""
    r = np.abs(b - a @ x).max()
    a_norm = float(abs(a).sum(axis=1).max())
    return float(r / (a_norm * np.abs(x).max() + np.abs(b).max()))


def solve_torsion(mesh: TriangleMesh) -> ScalarField:
    """Solve ``-Delta u = 1`` with ``u = 0`` on the boundary."""
    stiff, mass = assemble(mesh)
    inner = mesh.interior
    kii = stiff[inner][:, inner]
    rhs = (mass @ np.ones(mesh.n_nodes))[inner]
    lu = _factor(kii)
    ui = lu.solve(rhs)
    for _ in range(REFINE_SWEEPS):  # iterative refinement
        res = _backward_error(kii, ui, rhs)
        if res <= LINEAR_RTOL:
            break
        ui = ui + lu.solve(rhs - kii @ ui)
    res = _backward_error(kii, ui, rhs)
    if not np.isfinite(res) or res > LINEAR_RTOL:
        raise SolverFailure(f"torsion solve residual {res:.2e} exceeds {LINEAR_RTOL:g}")
    u = np.zeros(mesh.n_nodes)
    u[inner] = ui
    return ScalarField(mesh, u, TORSION, stiff, mass, residual=res)


def torsional_rigidity(u: ScalarField) -> float:
    return u.integral()


def solve_eigen(mesh: TriangleMesh, rtol: float = 1e-10, max_iter: int = 500):
    """First Dirichlet eigenpair by inverse iteration (shift 0).

    Returns ``(lambda_1, u)`` with ``u`` positive and of unit L2 norm.  The
    ground state is certified by its sign: any higher eigenfunction changes sign.
    """
    stiff, mass = assemble(mesh)
    inner = mesh.interior
    kii = stiff[inner][:, inner]
    mii = mass[inner][:, inner]
    lu = _factor(kii)
    x = np.ones(len(inner))
    x /= np.sqrt(x @ (mii @ x))
    rq = float(x @ (kii @ x))
    for it in range(1, max_iter + 1):
        y = lu.solve(mii @ x)
        y /= np.sqrt(y @ (mii @ y))
        rq_new = float(y @ (kii @ y))
        x = y
        if abs(rq_new - rq) < rtol * abs(rq_new):
            rq = rq_new
            break
        rq = rq_new
    else:
        raise NonConvergence(f"inverse iteration did not converge in {max_iter} iterations")
    if x.sum() < 0:
        x = -x
    if np.any(x < -1e-8 * np.abs(x).max()):
        raise SolverFailure("converged eigenvector changes sign: not the ground state")
    res = float(np.linalg.norm(kii @ x - rq * (mii @ x)) / (rq * np.linalg.norm(mii @ x)))
    u = np.zeros(mesh.n_nodes)
    u[inner] = x
    return rq, ScalarField(mesh, u, EIGENVALUE, stiff, mass, eigenvalue=rq, residual=res,
                           iterations=it)


def solve(body: Body, functional: str, target_h: float, symmetric=None):
    """Mesh ``body`` and solve; returns ``(energy, field)``."""
    mesh = mesh_body(body, target_h, symmetric=symmetric)
    if functional == TORSION:
        u = solve_torsion(mesh)
        return torsional_rigidity(u), u
    if functional == EIGENVALUE:
        return solve_eigen(mesh)
    raise ValueError(f"unknown functional {functional!r}")


# --------------------------------------------------------------------------
# boundary traces


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Samples of the boundary integrand of the Pohozaev identity.

    For a smooth body there is one sample per grid angle (the inverse Gauss map
    point), weighted by arc length ``r(theta) dtheta``.  For a polygon there is
    one sample per mesh boundary edge, carrying the exact edge integral of
    ``|grad u|^2`` (``q`` linear on the edge) and the polygon side it lies on.
    """

    theta: np.ndarray
    grad2: np.ndarray
    support: np.ndarray
    curvature: np.ndarray
    weight: np.ndarray
    energy: float
    functional: str
    smooth: bool
    side: Optional[np.ndarray] = None

    @property
    def n_angles(self) -> int:
        return len(self.theta)

    def pohozaev_integral(self) -> float:
        return float(np.sum(self.grad2 * self.support * self.weight))

    def gradient_integral(self) -> float:
        return float(np.sum(self.grad2 * self.weight))

    @property
    def alpha(self) -> int:
        return ALPHA[self.functional]

    @property
    def pohozaev_residual(self) -> float:
        target = abs(self.alpha) * self.energy
        return abs(target - self.pohozaev_integral()) / target

    @property
    def certified(self) -> bool:
        return self.pohozaev_residual <= POHOZAEV_GATE

    def report(self) -> dict:
        return {
            "functional": self.functional,
            "energy": self.energy,
            "pohozaev_integral": self.pohozaev_integral(),
            "pohozaev_residual": self.pohozaev_residual,
            "gradient_integral": self.gradient_integral(),
            "smooth": self.smooth,
        }


def _energy(u: ScalarField) -> float:
    return u.eigenvalue if u.kind == EIGENVALUE else torsional_rigidity(u)


def boundary_trace(u: ScalarField, body: Body, smooth_cutoff: Optional[int] = None) -> BoundaryTrace:
    """Recover ``|grad u|^2`` on the boundary and pair it with ``x . nu`` and ``G``.

    Parameters
    ----------
    u : ScalarField
        Torsion function or ground state on a mesh of ``body``.
    body : SupportFunction or ConvexPolygon
    smooth_cutoff : int, optional
        If given, Fourier modes of the grid samples above this are zeroed
        (smooth bodies only).  Off by default.
    """
    mesh = u.mesh
    q = u.boundary_flux()
    if isinstance(body, SupportFunction):
        r = body.check_convex()
        phi = mesh.boundary_angle
        if phi is None:
            raise SolverFailure("mesh boundary carries no normal angles; was it built from a polygon?")
        # (1,2,1) average along the loop damps node-to-node noise of the residual flux
        q = 0.25 * np.roll(q, 1) + 0.5 * q + 0.25 * np.roll(q, -1)
        spline = CubicSpline(np.r_[phi, phi[0] + 2.0 * np.pi], np.r_[q, q[0]] ** 2,
                             bc_type="periodic")
        grad2 = spline(body.theta)
        if smooth_cutoff:
            grad2 = lowpass(grad2, smooth_cutoff)[0]
        tr = BoundaryTrace(body.theta, grad2, body.values.copy(), 1.0 / r, r * body.dtheta,
                           _energy(u), u.kind, smooth=True)
    else:
        b = mesh.boundary
        a_pts, b_pts = mesh.nodes[b], mesh.nodes[np.roll(b, -1)]
        e = b_pts - a_pts
        length = np.linalg.norm(e, axis=1)
        normal = np.column_stack([e[:, 1], -e[:, 0]]) / length[:, None]
        qa, qb = q, np.roll(q, -1)
        grad2 = (qa**2 + qa * qb + qb**2) / 3.0
        theta = np.mod(np.arctan2(normal[:, 1], normal[:, 0]), 2.0 * np.pi)
        support = np.einsum("ij,ij->i", a_pts, normal)
        side = _polygon_side(body, theta)
        tr = BoundaryTrace(theta, grad2, support, np.zeros_like(theta), length, _energy(u),
                           u.kind, smooth=False, side=side)
    if np.any(tr.grad2 <= 0.0):
        i = int(np.argmin(tr.grad2))
        raise HopfViolation(f"recovered |grad u|^2 = {tr.grad2[i]:.3e} <= 0 at sample {i}")
    return tr


def _polygon_side(poly: ConvexPolygon, theta: np.ndarray) -> np.ndarray:
    ang = poly.normal_angles
    diff = np.abs(np.angle(np.exp(1j * (theta[:, None] - ang[None, :]))))
    return np.argmin(diff, axis=1)


def boundary_integral(u: ScalarField, phi: Callable[[np.ndarray], np.ndarray]) -> float:
    """``\\oint phi(nu(x)) |grad u|^2 ds`` on the mesh boundary, edge by edge."""
    mesh = u.mesh
    q = u.boundary_flux()
    b = mesh.boundary
    a_pts, b_pts = mesh.nodes[b], mesh.nodes[np.roll(b, -1)]
    e = b_pts - a_pts
    length = np.linalg.norm(e, axis=1)
    theta = np.arctan2(-e[:, 0], e[:, 1])
    qa, qb = q, np.roll(q, -1)
    return float(np.sum(phi(theta) * length * (qa**2 + qa * qb + qb**2) / 3.0))


def pohozaev_residual(energy: float, trace: BoundaryTrace) -> float:
    target = abs(trace.alpha) * energy
    return abs(target - trace.pohozaev_integral()) / target


# --------------------------------------------------------------------------
# ball oracles


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / gamma_fn(n / 2.0 + 1.0)


def bessel_first_zero(order: float) -> float:
    """First positive zero of ``J_order``."""
    # j_{nu,1} > nu; march until the first sign change, then bracket
    step = 0.05
    lo = max(order, 0.0) + 1e-9
    f_lo = jv(order, lo)
    while True:
        hi = lo + step
        f_hi = jv(order, hi)
        if f_lo * f_hi <= 0.0:
            return brentq(lambda x: jv(order, x), lo, hi, xtol=1e-15, rtol=1e-15)
        lo, f_lo = hi, f_hi


@dataclass(frozen=True)
class BallOracle:
    dimension: int
    radius: float
    torsion: float
    eigenvalue: float
    capacity: Optional[float]
    grad2_torsion: float
    grad2_eigenvalue: float
    grad2_capacity: Optional[float]
    boundary_area: float

    def gradient_integral(self, functional: str) -> float:
        """``\\int_{\\partial B} |grad u|^2``."""
        g = {TORSION: self.grad2_torsion, EIGENVALUE: self.grad2_eigenvalue,
             "capacity": self.grad2_capacity}[functional]
        if g is None:
            raise DimensionError("capacity is defined only for n >= 3")
        return g * self.boundary_area

    def energy(self, functional: str) -> float:
        e = {TORSION: self.torsion, EIGENVALUE: self.eigenvalue, "capacity": self.capacity}[functional]
        if e is None:
            raise DimensionError("capacity is defined only for n >= 3")
        return e


def ball_oracle(n: int, radius: float = 1.0) -> BallOracle:
    """Closed-form ground-state data of the ball of radius ``radius`` in R^n."""
    if n < 2:
        raise DimensionError("dimension must be at least 2")
    R = float(radius)
    w = unit_ball_volume(n)
    j = bessel_first_zero(n / 2.0 - 1.0)
    area = n * w * R ** (n - 1)
    lam = j**2 / R**2
    cap = n * (n - 2) * w * R ** (n - 2) if n >= 3 else None
    return BallOracle(
        dimension=n,
        radius=R,
        torsion=w * R ** (n + 2) / (n * (n + 2)),
        eigenvalue=lam,
        capacity=cap,
        grad2_torsion=(R / n) ** 2,
        # Pohozaev on the ball: 2 lambda = R \int |grad u|^2
        grad2_eigenvalue=2.0 * lam / (R * area),
        grad2_capacity=((n - 2) / R) ** 2 if n >= 3 else None,
        boundary_area=area,
    )


def capacity_oracle(n: int, radius: float = 1.0) -> float:
    if n < 3:
        raise DimensionError("Newtonian capacity requires n >= 3")
    return ball_oracle(n, radius).capacity


def solve_report(energy: float, u: ScalarField, trace: Optional[BoundaryTrace] = None,
                 **meta) -> str:
    out = {"energy": energy, **u.report(), **meta}
    if trace is not None:
        out["pohozaev_residual"] = trace.pohozaev_residual
        out["gradient_integral"] = trace.gradient_integral()
    return json.dumps(out, sort_keys=True)
