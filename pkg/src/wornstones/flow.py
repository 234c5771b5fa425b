"""Worn-stone flow of a centrally symmetric convex body.

The support function evolves by

    dh/dt = -a F(K_t) / (|grad u|^2 (h + h''))

where ``F`` is the torsional rigidity or the first Dirichlet eigenvalue of the
current body and ``|grad u|^2`` is read at the boundary point with outer normal
``theta``.  The body shrinks at the exponential rate ``gamma = 2 pi a / |alpha|``
(``pi a / 2`` for torsion, ``pi a`` for the eigenvalue), so the normalized body
``exp(gamma t) h`` keeps a constant energy ``exp(alpha gamma t) F``.

Time stepping is explicit Euler.  A trial step is accepted only if the body stays
positive and convex and the entropy ``\\oint log h_tilde`` does not grow; a
rejected step halves ``dt``.  Each accepted step ends with spectral smoothing
above a cutoff mode, and ``dt`` is also capped by the linear stability bound of
the highest retained mode.

The energy in the velocity is the boundary form ``\\oint h |grad u|^2 r / |alpha|``
computed from the same trace as ``|grad u|^2``.  It equals ``F`` up to the
Pohozaev residual, and with it the discrete entropy of an Euler step can only
decrease (Cauchy-Schwarz plus ``log(1 + x) <= x``).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import NonConvex, OriginOutside, StepFailure, SymmetryViolation
from .geometry import (
    DEFAULT_N_ANGLES,
    AngleGrid,
    SupportFunction,
    boundary_point,
    centroid,
    distance_to_disk,
    lowpass,
)
from .measures import cone_energy_measure, constant_density_deficit, first_variation_measure
from .pde import ALPHA, FUNCTIONALS, TORSION, BoundaryTrace, boundary_trace, solve

ENTROPY_TOL = 1e-6
CENTER_TOL = 1e-6
CFL_SAFETY = 0.9
DT_GROWTH = 1.25
SNAPSHOT_STRIDE = 10


@dataclass(frozen=True)
class FlowConfig:
    """Parameters of one flow run.

    Parameters
    ----------
    functional : {"torsion", "eigenvalue"}
    a : float
        Wear constant.
    dt_init, dt_min, dt_max : float
        Initial, smallest and largest time step.
    t_end : float
    grid : AngleGrid
    mesh_target : float
        Mesh size relative to the mean of the current support function.
    cutoff : int, optional
        Highest Fourier mode kept by the smoothing; ``None`` means ``n_angles // 4``
        and ``0`` disables smoothing.
    entropy_tol : float
        Largest entropy increase tolerated in an accepted step.
    """

    functional: str = TORSION
    a: float = 1.0
    dt_init: float = 1e-3
    dt_min: float = 1e-8
    dt_max: float = 0.05
    t_end: float = 1.0
    grid: AngleGrid = field(default_factory=lambda: AngleGrid(DEFAULT_N_ANGLES))
    mesh_target: float = 0.03
    cutoff: Optional[int] = None
    entropy_tol: float = ENTROPY_TOL

    def __post_init__(self):
        if self.functional not in FUNCTIONALS:
            raise ValueError(f"unknown functional {self.functional!r}")
        if not self.a > 0:
            raise ValueError("wear constant must be positive")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.mesh_target > 0:
            raise ValueError("mesh target must be positive")

    @property
    def alpha(self) -> int:
        return ALPHA[self.functional]

    @property
    def gamma(self) -> float:
        return self.a * 2.0 * np.pi / abs(self.alpha)

    @property
    def smoothing_cutoff(self) -> int:
        return self.grid.n_angles // 4 if self.cutoff is None else int(self.cutoff)

    def to_dict(self) -> dict:
        return {
            "functional": self.functional, "a": self.a, "dt_init": self.dt_init,
            "dt_min": self.dt_min, "dt_max": self.dt_max, "t_end": self.t_end,
            "n_angles": self.grid.n_angles, "mesh_target": self.mesh_target,
            "cutoff": self.smoothing_cutoff, "entropy_tol": self.entropy_tol,
        }


@dataclass(frozen=True, eq=False)
class FlowState:
    """Snapshot of a flow trajectory at time ``t``."""

    t: float
    h: SupportFunction
    h_tilde: SupportFunction
    F: float
    F_tilde: float
    entropy: float
    deficit: float
    dist_to_disk: float
    residual: float
    dt: float = 0.0
    smoothing_removed: float = 0.0
    trace: Optional[BoundaryTrace] = field(default=None, repr=False)

    def row(self) -> dict:
        return {
            "t": self.t, "F": self.F, "F_tilde": self.F_tilde, "entropy": self.entropy,
            "deficit": self.deficit, "dist_to_disk": self.dist_to_disk, "dt": self.dt,
            "pohozaev_residual": self.residual, "smoothing_removed": self.smoothing_removed,
        }


@dataclass(frozen=True)
class StepRecord:
    """Acceptance log entry: the step size used and why earlier tries failed."""

    t: float
    dt: float
    rejections: int
    reasons: tuple = ()


@dataclass
class FlowTrace:
    """Snapshots of a run plus the step acceptance log."""

    config: FlowConfig
    states: List[FlowState] = field(default_factory=list)
    log: List[StepRecord] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states])

    @property
    def max_residual(self) -> float:
        return float(self.column("residual").max())

    def fitted_exponent(self) -> float:
        """Least-squares slope of ``log F`` against ``t`` (``-alpha gamma`` in theory)."""
        t, F = self.column("t"), self.column("F")
        return float(np.polyfit(t, np.log(F), 1)[0])

    def radius_exponent(self) -> float:
        """Least-squares slope of ``log mean(h)`` against ``t`` (``-gamma`` in theory)."""
        t = self.column("t")
        return float(np.polyfit(t, np.log([s.h.mean() for s in self.states]), 1)[0])

    def to_csv(self, path) -> None:
        fields = list(self.states[0].row())
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for s in self.states:
                w.writerow({k: repr(float(v)) for k, v in s.row().items()})

    def snapshots(self, stride: int = SNAPSHOT_STRIDE) -> List[FlowState]:
        """Every ``stride``-th state plus the last one, as written to disk."""
        return [self.states[i] for i in _strided(len(self.states), stride)]

    def write_bodies(self, directory, stride: int = 1) -> List[Path]:
        """One JSON body file per ``stride``-th snapshot (the last one always)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for i in _strided(len(self.states), stride):
            s = self.states[i]
            doc = {
                "t": s.t, "n_angles": s.h.n_angles, "values": s.h.values.tolist(),
                "values_normalized": s.h_tilde.values.tolist(),
                "mesh_target": self.config.mesh_target, "pohozaev_residual": s.residual,
            }
            p = directory / f"body_{i:05d}.json"
            p.write_text(json.dumps(doc) + "\n")
            paths.append(p)
        return paths

    def to_svg(self, path, stride: int = 1, cell: int = 160) -> None:
        """Static strip of normalized outlines, one cell per ``stride``-th snapshot."""
        idx = _strided(len(self.states), stride)
        scale = max(np.abs(boundary_point(self.states[i].h_tilde, self.states[i].h_tilde.theta)).max()
                    for i in idx)
        half = 0.5 * cell
        k = 0.42 * cell / scale
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{cell * len(idx)}" '
                 f'height="{cell + 20}" font-family="monospace" font-size="11">']
        for j, i in enumerate(idx):
            s = self.states[i]
            x0 = j * cell + half
            pts = boundary_point(s.h_tilde, s.h_tilde.theta)
            path_pts = " ".join(f"{x0 + k * x:.2f},{half - k * y:.2f}" for x, y in pts)
            parts.append(f'<line x1="{x0 - half + 4:.1f}" y1="{half:.1f}" x2="{x0 + half - 4:.1f}" '
                         f'y2="{half:.1f}" stroke="#bbb"/>')
            parts.append(f'<line x1="{x0:.1f}" y1="4" x2="{x0:.1f}" y2="{cell - 4:.1f}" stroke="#bbb"/>')
            parts.append(f'<polygon points="{path_pts}" fill="none" stroke="#333"/>')
            parts.append(f'<text x="{x0 - half + 6:.1f}" y="{cell + 14}">t={s.t:.4f}</text>')
        parts.append("</svg>")
        Path(path).write_text("\n".join(parts) + "\n")


def _strided(n: int, stride: int) -> List[int]:
    if stride < 1:
        raise ValueError("snapshot stride must be at least 1")
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


# --------------------------------------------------------------------------
# pieces of one step


def entropy(h_tilde: SupportFunction, t: float = 0.0, cfg: Optional[FlowConfig] = None) -> float:
    """``\\oint log h_tilde dtheta``; equal to ``\\oint log h + 2 pi gamma t``.

    ``t`` and ``cfg`` are accepted for symmetry with the time-dependent form and
    are not needed once the body is normalized.
    """
    v = h_tilde.values
    if np.any(v <= 0.0):
        raise OriginOutside("entropy needs a positive support function")
    return float(np.sum(np.log(v)) * h_tilde.dtheta)


def _trace(h: SupportFunction, cfg: FlowConfig) -> BoundaryTrace:
    energy, u = solve(h, cfg.functional, cfg.mesh_target * h.mean())
    return boundary_trace(u, h)


def _velocity(h: SupportFunction, trace: BoundaryTrace, cfg: FlowConfig):
    """Flow velocity and the diffusion coefficient of its linearization."""
    r = h.check_convex()
    q2 = trace.grad2
    energy = trace.pohozaev_integral() / abs(cfg.alpha)
    rhs = -cfg.a * energy / (q2 * r)
    if h.is_centrally_symmetric():
        # average with the antipode so rounding never breaks the symmetry
        rhs = 0.5 * (rhs + np.roll(rhs, rhs.size // 2))
    return rhs, cfg.a * energy / (q2 * r * r)


def flow_rhs(h: SupportFunction, cfg: FlowConfig) -> np.ndarray:
    """``dh/dt`` at the grid angles.

    Raises
    ------
    NonConvex, HopfViolation, UncertifiedTrace
    """
    trace = _trace(h, cfg)
    first_variation_measure(trace)  # certification gate
    return _velocity(h, trace, cfg)[0]


def _state(t: float, h: SupportFunction, cfg: FlowConfig, dt: float = 0.0,
           removed: float = 0.0) -> FlowState:
    trace = _trace(h, cfg)
    mu = first_variation_measure(trace)
    h_tilde = h.scaled(np.exp(cfg.gamma * t))
    return FlowState(
        t=t, h=h, h_tilde=h_tilde, F=trace.energy,
        F_tilde=float(np.exp(cfg.alpha * cfg.gamma * t) * trace.energy),
        entropy=entropy(h_tilde), deficit=constant_density_deficit(cone_energy_measure(h, mu)),
        dist_to_disk=distance_to_disk(h_tilde), residual=trace.pohozaev_residual,
        dt=dt, smoothing_removed=removed, trace=trace,
    )


def initial_state(h0: SupportFunction, cfg: FlowConfig) -> FlowState:
    if h0.n_angles != cfg.grid.n_angles:
        raise ValueError(f"body has {h0.n_angles} angles, config grid has {cfg.grid.n_angles}")
    return _state(0.0, h0, cfg)


def stable_dt(state: FlowState, cfg: FlowConfig) -> float:
    """Explicit Euler bound ``2 / (D (k^2 - 1))`` for the highest retained mode ``k``."""
    _, diffusion = _velocity(state.h, state.trace, cfg)
    k = cfg.smoothing_cutoff or cfg.grid.n_angles // 2
    return CFL_SAFETY * 2.0 / (float(diffusion.max()) * (k * k - 1))


def _try(state: FlowState, rhs: np.ndarray, dt: float, cfg: FlowConfig):
    """Trial update; returns ``(h, removed_energy)`` or a rejection reason string."""
    values = state.h.values + dt * rhs
    if np.any(values <= 0.0):
        return "positivity"
    removed = 0.0
    if cfg.smoothing_cutoff:
        values, removed = lowpass(values, cfg.smoothing_cutoff)
    h = SupportFunction(values)
    if not h.is_convex():
        return "convexity"
    t = state.t + dt
    if entropy(h.scaled(np.exp(cfg.gamma * t))) > state.entropy + cfg.entropy_tol:
        return "entropy"
    return h, removed


def step(state: FlowState, cfg: FlowConfig, dt: Optional[float] = None):
    """One accepted explicit Euler step; returns ``(new_state, record)``.

    ``dt`` defaults to the last step grown by ``DT_GROWTH``, capped by ``dt_max``,
    the stability bound and the remaining time to ``t_end``.

    Raises
    ------
    StepFailure
        If ``dt`` falls below ``dt_min`` without an accepted trial, or the
        stability bound is already below ``dt_min``.
    """
    rhs, _ = _velocity(state.h, state.trace, cfg)
    if dt is None:
        dt = cfg.dt_init if state.dt == 0.0 else DT_GROWTH * state.dt
        dt = min(dt, cfg.dt_max, stable_dt(state, cfg))
        if dt < cfg.dt_min:
            raise StepFailure(f"stability bound {dt:.3e} is below dt_min at t={state.t:.6g}")
    dt = min(dt, cfg.t_end - state.t) if state.t < cfg.t_end else dt
    reasons = []
    while True:
        out = _try(state, rhs, dt, cfg)
        if not isinstance(out, str):
            break
        reasons.append(out)
        dt *= 0.5
        if dt < cfg.dt_min:
            raise StepFailure(f"no acceptable step at t={state.t:.6g}: "
                              f"last rejections {reasons[-3:]}")
    h, removed = out
    new = _state(state.t + dt, h, cfg, dt=dt, removed=removed)
    return new, StepRecord(new.t, dt, len(reasons), tuple(reasons))


def run(h0: SupportFunction, cfg: FlowConfig, max_steps: int = 1_000_000) -> FlowTrace:
    """Integrate from ``h0`` to ``cfg.t_end``.

    Raises
    ------
    SymmetryViolation, NonConvex
        If ``h0`` is not centrally symmetric, centered and convex.
    StepFailure
        On a failed step; ``exc.trace`` holds the trajectory so far.
    """
    if not h0.is_centrally_symmetric():
        raise SymmetryViolation(f"initial body is not centrally symmetric "
                                f"(defect {h0.symmetry_defect():.2e})")
    h0.check_convex()
    if np.linalg.norm(centroid(h0)) > CENTER_TOL * h0.mean():
        raise SymmetryViolation("initial body is not centered")
    # exact antipodal symmetry from the start
    h0 = SupportFunction(0.5 * (h0.values + np.roll(h0.values, h0.n_angles // 2)))
    trace = FlowTrace(cfg)
    state = initial_state(h0, cfg)
    trace.states.append(state)
    try:
        while state.t < cfg.t_end * (1.0 - 1e-12) and len(trace.log) < max_steps:
            state, record = step(state, cfg)
            trace.states.append(state)
            trace.log.append(record)
    except StepFailure as exc:
        raise StepFailure(str(exc), trace=trace) from None
    except NonConvex as exc:
        raise StepFailure(f"flow lost convexity: {exc}", trace=trace) from None
    return trace
