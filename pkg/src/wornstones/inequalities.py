"""Verifiers for the inequalities around torsion and the first Dirichlet eigenvalue.

Every check returns an :class:`InequalityReport` normalized so that the claim
reads ``lhs <= rhs``; ``margin = rhs - lhs`` is nonnegative when it holds.
PDE-backed checks carry ``tol = max(1%, 3 x Pohozaev residual) * |rhs|``;
closed-form and quadrature checks use ``1e-9``.  Checks written in logarithmic
form (rhs may vanish) carry the relative energy tolerance through the log.

All bodies live in the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import SymmetryViolation
from .geometry import (
    AngleGrid,
    Body,
    ConvexPolygon,
    SupportFunction,
    centroid_and_center,
    min_width,
    polar_volume,
    trig_evaluate,
    volume,
)
from .measures import first_variation_measure
from .pde import (
    ALPHA,
    EIGENVALUE,
    TORSION,
    BoundaryTrace,
    ball_oracle,
    boundary_trace,
    solve,
)

DEFAULT_MESH_TARGET = 0.03
PDE_REL_TOL = 0.01
CLOSED_FORM_TOL = 1e-9
EQUALITY_REL = 0.01
SERIES_RTOL = 1e-14

DEFAULT_CORPUS = (
    "disk",
    "ellipse:1.2:1",
    "ellipse:1.5:1",
    "ellipse:2:1",
    "square",
    "hexagon",
    "random:1",
    "random:2",
)
DEFAULT_RECT_ELLS = (0.5, 1.0, 2.0, 4.0)
DEFAULT_RECT_LAMS = (0.25, 0.5, 0.75)

_POLY_QUAD = 1 << 14


@dataclass
class InequalityReport:
    """Outcome of one inequality check ``lhs <= rhs``.

    ``equality_class`` names the bodies for which equality is known to hold
    (``"ball"``, ``"ellipse"``, ``"equal"``) or is ``None``.
    """

    name: str
    lhs: float
    rhs: float
    tol: float
    body: str = ""
    equality_class: Optional[str] = None
    eq_tol: Optional[float] = None
    meta: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.lhs) and math.isfinite(self.rhs)):
            raise ValueError(f"{self.name}: non-finite sides {self.lhs!r}, {self.rhs!r}")
        if self.eq_tol is None:
            self.eq_tol = EQUALITY_REL * abs(self.rhs)

    @property
    def margin(self) -> float:
        return float(self.rhs - self.lhs)

    @property
    def passed(self) -> bool:
        return bool(self.margin >= -self.tol)

    @property
    def near_equality(self) -> bool:
        return bool(abs(self.margin) <= self.eq_tol)

    def row(self) -> dict:
        return {
            "name": self.name,
            "body": self.body,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tol": self.tol,
            "pass": self.passed,
            "near_equality": self.near_equality,
        }

    def to_dict(self) -> dict:
        return {**self.row(), "equality_class": self.equality_class, "eq_tol": self.eq_tol,
                "meta": self.meta}


# --------------------------------------------------------------------------
# solves


@dataclass(frozen=True)
class Solution:
    """Energy and certified boundary trace of one body for one functional."""

    functional: str
    energy: float
    trace: BoundaryTrace
    target_h: float

    @property
    def residual(self) -> float:
        return self.trace.pohozaev_residual

    @property
    def gradient_integral(self) -> float:
        return self.trace.gradient_integral()


def solve_body(body: Body, functional: str, target_h: float = DEFAULT_MESH_TARGET) -> Solution:
    energy, u = solve(body, functional, target_h)
    return Solution(functional, energy, boundary_trace(u, body), target_h)


class SolutionCache:
    """Memoizes :func:`solve_body` by (label, functional)."""

    def __init__(self, target_h: float = DEFAULT_MESH_TARGET):
        self.target_h = target_h
        self._store: Dict[Tuple[str, str], Solution] = {}

    def get(self, label: str, body: Body, functional: str) -> Solution:
        key = (label, functional)
        if key not in self._store:
            self._store[key] = solve_body(body, functional, self.target_h)
        return self._store[key]


def _pde_tol(rhs: float, *solutions: Solution) -> float:
    res = max((s.residual for s in solutions), default=0.0)
    return max(PDE_REL_TOL, 3.0 * res) * abs(rhs)


def _meta(*solutions: Solution, **extra) -> dict:
    out = dict(extra)
    if solutions:
        out["mesh_target"] = solutions[0].target_h
        out["pohozaev_residual"] = max(s.residual for s in solutions)
    return out


def _grid_size(body: Body) -> int:
    return body.n_angles if isinstance(body, SupportFunction) else AngleGrid().n_angles


def _solution(body, functional, solution, target_h):
    return solution if solution is not None else solve_body(body, functional, target_h)


# --------------------------------------------------------------------------
# PDE-backed inequalities


def saint_venant(K: Body, solution: Optional[Solution] = None, target_h: float = DEFAULT_MESH_TARGET,
                 label: str = "") -> InequalityReport:
    """``T(K) <= |K|^2 / (8 pi)``, equality only for disks."""
    s = _solution(K, TORSION, solution, target_h)
    rhs = volume(K) ** 2 / (8.0 * math.pi)
    return InequalityReport("saint_venant", s.energy, rhs, _pde_tol(rhs, s), label, "ball",
                            meta=_meta(s, n_angles=_grid_size(K)))


def faber_krahn(K: Body, solution: Optional[Solution] = None, target_h: float = DEFAULT_MESH_TARGET,
                label: str = "") -> InequalityReport:
    """``lambda_1(B)|B| <= lambda_1(K)|K|``, equality only for disks."""
    s = _solution(K, EIGENVALUE, solution, target_h)
    ball = ball_oracle(2)
    lhs = ball.eigenvalue * math.pi
    rhs = s.energy * volume(K)
    return InequalityReport("faber_krahn", lhs, rhs, _pde_tol(rhs, s), label, "ball",
                            meta=_meta(s, n_angles=_grid_size(K)))


def bfl_ball_ratio(functional: str) -> float:
    """Scale-invariant ratio of the isoperimetric-type inequality on the disk."""
    ball = ball_oracle(2)
    if functional == TORSION:
        # Lambda(B)^4 = 2 / (4^3 pi)
        return (2.0 / (4.0**3 * math.pi)) ** 0.25
    return ball.eigenvalue**1.5 / ball.gradient_integral(EIGENVALUE)


def bfl_isoperimetric(K: Body, functional: str, solution: Optional[Solution] = None,
                      target_h: float = DEFAULT_MESH_TARGET, label: str = "") -> InequalityReport:
    """``F(K)^p / \\int_{dK} |grad u|^2 <= same for the disk``.

    ``p = 3/4`` for torsion and ``p = 3/2`` for the eigenvalue (unit-norm
    eigenfunction); both ratios are scale invariant.
    """
    s = _solution(K, functional, solution, target_h)
    p = 0.75 if functional == TORSION else 1.5
    lhs = s.energy**p / s.gradient_integral
    rhs = bfl_ball_ratio(functional)
    return InequalityReport(f"bfl_{functional}", lhs, rhs, _pde_tol(rhs, s), label, "ball",
                            meta=_meta(s, n_angles=_grid_size(K)))


def bm_first_variation(K: Body, L: Body, functional: str, solution_K: Optional[Solution] = None,
                       energy_L: Optional[float] = None, target_h: float = DEFAULT_MESH_TARGET,
                       label: str = "") -> InequalityReport:
    """``F(K)^{1-1/a} F(L)^{1/a} <= (1/|a|) \\int h_L d mu_K``.

    Equality when ``K`` and ``L`` are homothetic; the suite uses ``L`` = unit
    disk, so its equality class is the disks.
    """
    s = _solution(K, functional, solution_K, target_h)
    sols = [s]
    if energy_L is None:
        sL = solve_body(L, functional, target_h)
        energy_L = sL.energy
        sols.append(sL)
    a = ALPHA[functional]
    mu = first_variation_measure(s.trace)
    if isinstance(L, ConvexPolygon):
        h_l = L.support
    else:
        h_l = (lambda t: trig_evaluate(L.values, t))  # noqa: E731
    f1 = mu.integrate(h_l) / abs(a)
    lhs = s.energy ** (1.0 - 1.0 / a) * energy_L ** (1.0 / a)
    return InequalityReport(f"bm_first_variation_{functional}", lhs, f1, _pde_tol(f1, *sols),
                            label, "ball", meta=_meta(*sols, n_angles=_grid_size(K)))


def eigen_width_bound(K: Body, solution: Optional[Solution] = None,
                      target_h: float = DEFAULT_MESH_TARGET, label: str = "") -> InequalityReport:
    """``pi^2 / w(K)^2 <= lambda_1(K)`` with ``w`` the minimal width."""
    s = _solution(K, EIGENVALUE, solution, target_h)
    w = min_width(K)
    rhs = s.energy
    return InequalityReport("eigen_width", math.pi**2 / w**2, rhs, _pde_tol(rhs, s), label, None,
                            meta=_meta(s, n_angles=_grid_size(K), width=w))


# --------------------------------------------------------------------------
# closed-form and quadrature inequalities


def affine2_surface_area(K: Body) -> float:
    """``Theta_2 = \\oint G^{1/2} (x . nu)^{-1/2} dH^1 = \\int sqrt(r / h) dtheta``.

    Zero for polygons, whose boundary has vanishing curvature almost everywhere.
    """
    if isinstance(K, ConvexPolygon):
        return 0.0
    r = K.check_convex()
    return float(np.sum(np.sqrt(r / K.values))) * K.dtheta


def affine2_isoperimetric(K: Body, label: str = "") -> InequalityReport:
    """``Theta_2(K) <= 2 pi``, equality for origin-centred ellipses."""
    lhs = affine2_surface_area(K)
    rhs = 2.0 * math.pi
    return InequalityReport("affine2_isoperimetric", lhs, rhs, CLOSED_FORM_TOL * rhs, label,
                            "ellipse", meta={"n_angles": _grid_size(K)})


def blaschke_santalo(K: Body, label: str = "") -> InequalityReport:
    """``|K| |K^o| <= pi^2`` after moving the centroid to the origin."""
    _, centered = centroid_and_center(K)
    lhs = volume(centered) * polar_volume(centered)
    rhs = math.pi**2
    return InequalityReport("blaschke_santalo", lhs, rhs, CLOSED_FORM_TOL * rhs, label,
                            "ellipse", meta={"n_angles": _grid_size(K)})


def _mean_log_support(L: Body) -> float:
    """``(1 / 2 pi) \\int log h_L dtheta``."""
    if isinstance(L, ConvexPolygon):
        t = AngleGrid(_POLY_QUAD).theta
        return float(np.mean(np.log(L.support(t))))
    return float(np.mean(np.log(L.values)))


def guan_ni_log(L: Body, solution: Optional[Solution] = None, target_h: float = DEFAULT_MESH_TARGET,
                label: str = "") -> List[InequalityReport]:
    """Log-volume and log-torsion comparisons of a symmetric body with the unit disk.

    Both read ``c log(F(L)/F(B)) <= \\int log(h_L/h_B) dV_B / |V_B|`` with
    ``c = 1/2`` for area and ``c = 1/4`` for torsion (the torsion form follows
    from the area form and the Saint-Venant inequality).

    Raises
    ------
    SymmetryViolation
        If ``L`` is not centrally symmetric.
    """
    if not L.is_centrally_symmetric():
        raise SymmetryViolation("log-Minkowski comparison needs a centrally symmetric body")
    rhs = _mean_log_support(L)
    vol_lhs = 0.5 * math.log(volume(L) / math.pi)
    out = [InequalityReport("guan_ni_volume", vol_lhs, rhs, CLOSED_FORM_TOL, label, "ball",
                            eq_tol=CLOSED_FORM_TOL, meta={"n_angles": _grid_size(L)})]
    s = _solution(L, TORSION, solution, target_h)
    tor_lhs = 0.25 * math.log(s.energy / ball_oracle(2).torsion)
    # a relative error e in T moves the left side by about e / 4
    tol = 0.25 * max(PDE_REL_TOL, 3.0 * s.residual)
    out.append(InequalityReport("guan_ni_torsion", tor_lhs, rhs, tol, label, "ball",
                                eq_tol=0.25 * EQUALITY_REL, meta=_meta(s, n_angles=_grid_size(L))))
    return out


# --------------------------------------------------------------------------
# rectangles


def rectangle_eigenvalue(ell: float) -> float:
    """``lambda_1`` of the ``ell x 1`` rectangle."""
    return math.pi**2 * (1.0 + 1.0 / ell**2)


def rectangle_torsion(ell: float, rtol: float = SERIES_RTOL) -> Tuple[float, int]:
    """Torsional rigidity of the ``ell x 1`` rectangle and the number of series terms.

    ``T = ell^3/12 - 16 ell^4 / pi^5 sum_k tanh((2k+1) pi / (2 ell)) / (2k+1)^5``,
    truncated once a term drops below ``rtol`` times the partial sum.
    """
    if not ell > 0:
        raise ValueError("rectangle side must be positive")
    total, k = 0.0, 0
    while True:
        m = 2 * k + 1
        term = math.tanh(m * math.pi / (2.0 * ell)) / m**5
        total += term
        k += 1
        if term < rtol * total:
            break
    return ell**3 / 12.0 - 16.0 * ell**4 / math.pi**5 * total, k


def rectangle_logbm_table(ells: Sequence[float] = DEFAULT_RECT_ELLS,
                          lams: Sequence[float] = DEFAULT_RECT_LAMS,
                          functional: str = EIGENVALUE) -> List[InequalityReport]:
    """log-Brunn-Minkowski comparisons inside the rectangle family.

    For ``R_l = [l x 1]`` the log-Minkowski combination of ``R_{l1}`` and
    ``R_{l2}`` with weight ``lam`` is ``R_l`` with ``l = l1^{1-lam} l2^lam``.
    The eigenvalue rows check ``lambda_1(R_l) <= lambda_1(R_l1)^{1-lam}
    lambda_1(R_l2)^lam``; torsion rows check the reverse for ``T``.
    """
    if functional not in (TORSION, EIGENVALUE):
        raise ValueError(f"unknown functional {functional!r}")
    rows = []
    for l1 in ells:
        for l2 in ells:
            for lam in lams:
                ell = l1 ** (1.0 - lam) * l2**lam
                meta = {"l1": l1, "l2": l2, "lambda": lam, "l": ell}
                if functional == EIGENVALUE:
                    lhs = rectangle_eigenvalue(ell)
                    rhs = rectangle_eigenvalue(l1) ** (1.0 - lam) * rectangle_eigenvalue(l2) ** lam
                else:
                    (t, n), (t1, n1), (t2, n2) = (rectangle_torsion(x) for x in (ell, l1, l2))
                    lhs, rhs = t1 ** (1.0 - lam) * t2**lam, t
                    meta["series_terms"] = max(n, n1, n2)
                rows.append(InequalityReport(
                    f"logbm_rect_{functional}", lhs, rhs, CLOSED_FORM_TOL,
                    f"rect:{l1:g}|rect:{l2:g}", "equal", eq_tol=CLOSED_FORM_TOL, meta=meta))
    return rows


# --------------------------------------------------------------------------
# corpus suite

SUITE_CHECKS = (
    "saint_venant",
    "faber_krahn",
    "affine2_isoperimetric",
    "bfl_torsion",
    "bfl_eigenvalue",
    "blaschke_santalo",
    "bm_first_variation_torsion",
    "bm_first_variation_eigenvalue",
    "guan_ni_volume",
    "guan_ni_torsion",
    "eigen_width",
)


def body_suite(label: str, body: Body, cache: SolutionCache,
               only: Optional[Iterable[str]] = None) -> List[InequalityReport]:
    """Every applicable check on one body; ``only`` filters by check name."""
    want = set(SUITE_CHECKS if only is None else only)
    unknown = want - set(SUITE_CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    disk = SupportFunction(np.ones(_grid_size(body)))
    ball = ball_oracle(2)
    need_t = want & {"saint_venant", "bfl_torsion", "bm_first_variation_torsion", "guan_ni_torsion"}
    need_e = want & {"faber_krahn", "bfl_eigenvalue", "bm_first_variation_eigenvalue", "eigen_width"}
    st = cache.get(label, body, TORSION) if need_t else None
    se = cache.get(label, body, EIGENVALUE) if need_e else None
    out: List[InequalityReport] = []
    if "saint_venant" in want:
        out.append(saint_venant(body, st, label=label))
    if "faber_krahn" in want:
        out.append(faber_krahn(body, se, label=label))
    if "affine2_isoperimetric" in want:
        out.append(affine2_isoperimetric(body, label=label))
    if "bfl_torsion" in want:
        out.append(bfl_isoperimetric(body, TORSION, st, label=label))
    if "bfl_eigenvalue" in want:
        out.append(bfl_isoperimetric(body, EIGENVALUE, se, label=label))
    if "blaschke_santalo" in want:
        out.append(blaschke_santalo(body, label=label))
    if "bm_first_variation_torsion" in want:
        out.append(bm_first_variation(body, disk, TORSION, st, ball.torsion, label=label))
    if "bm_first_variation_eigenvalue" in want:
        out.append(bm_first_variation(body, disk, EIGENVALUE, se, ball.eigenvalue, label=label))
    if want & {"guan_ni_volume", "guan_ni_torsion"} and body.is_centrally_symmetric():
        gn = guan_ni_log(body, st or cache.get(label, body, TORSION), label=label)
        out.extend(r for r in gn if r.name in want)
    if "eigen_width" in want:
        out.append(eigen_width_bound(body, se, label=label))
    return out


def run_suite(corpus: Iterable[Tuple[str, Body]], target_h: float = DEFAULT_MESH_TARGET,
              only: Optional[Iterable[str]] = None,
              tol_scale: float = 1.0) -> List[InequalityReport]:
    """Run :func:`body_suite` over ``(label, body)`` pairs.

    ``tol_scale`` multiplies every tolerance (used to force a failing run).
    """
    cache = SolutionCache(target_h)
    out = []
    for label, body in corpus:
        for rep in body_suite(label, body, cache, only):
            rep.tol *= tol_scale
            out.append(rep)
    return out


def in_equality_class(label: str, equality_class: Optional[str]) -> bool:
    """Whether a fixture label belongs to the documented equality class."""
    name = label.partition(":")[0]
    if equality_class == "ball":
        return name == "disk"
    if equality_class == "ellipse":
        return name in ("disk", "ellipse")
    return False
