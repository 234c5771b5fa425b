"""Named body fixtures and the JSON body file format.

Fixture strings
---------------
``disk`` / ``disk:R``
    Disk of radius ``R`` (default 1).
``ellipse:a:b``
    Centred ellipse with semi-axes ``a`` (along x) and ``b``.
``square`` / ``square:s``
    Centred square of side ``s`` (default 1), kept as a polygon.
``rect:l``
    Centred ``l x 1`` rectangle, as a polygon.
``hexagon`` / ``hexagon:R``
    Regular hexagon with circumradius ``R`` (default 1), as a polygon.
``fourier:c0,a1,b1,a2,b2,...``
    ``h = c0 + sum a_k cos k t + b_k sin k t``; terms may also be named, as in
    ``fourier:1,c3=0.2,s2=0.05``.
``smooth:<polygon fixture>:w``
    Polygon whose surface-area measure is convolved with a wrapped Gaussian of
    angular width ``w``; e.g. ``smooth:square:0.15``.  Always strictly convex.
``random:seed``
    Smoothed random centrally symmetric polygon, reproducible from ``seed``.

Body files are JSON, either ``{"n_angles": N, "values": [...]}`` for sampled
support functions or ``{"vertices": [[x, y], ...]}`` for polygons.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Union

import numpy as np

from .errors import BodyFileError, GeometryError
from .geometry import (
    DEFAULT_N_ANGLES,
    AngleGrid,
    Body,
    ConvexPolygon,
    SupportFunction,
)

RANDOM_SMOOTHING = 0.18
RANDOM_ROUNDING = 0.05
_DENSE = 1 << 14


def disk(radius: float = 1.0, n_angles: int = DEFAULT_N_ANGLES) -> SupportFunction:
    return SupportFunction(np.full(AngleGrid(n_angles).n_angles, float(radius)))


def ellipse(a: float, b: float, n_angles: int = DEFAULT_N_ANGLES) -> SupportFunction:
    t = AngleGrid(n_angles).theta
    return SupportFunction(np.hypot(a * np.cos(t), b * np.sin(t)))


def rectangle(width: float, height: float = 1.0) -> ConvexPolygon:
    x, y = 0.5 * width, 0.5 * height
    return ConvexPolygon(np.array([[-x, -y], [x, -y], [x, y], [-x, y]]))


def regular_polygon(n_sides: int, circumradius: float = 1.0, phase: float = 0.0) -> ConvexPolygon:
    t = phase + 2.0 * np.pi * np.arange(n_sides) / n_sides
    return ConvexPolygon(circumradius * np.column_stack([np.cos(t), np.sin(t)]))


def fourier(coefficients, n_angles: int = DEFAULT_N_ANGLES) -> SupportFunction:
    """Support function from ``[c0, a1, b1, a2, b2, ...]``."""
    c = list(coefficients)
    t = AngleGrid(n_angles).theta
    h = np.full_like(t, float(c[0]))
    for j, v in enumerate(c[1:]):
        k = j // 2 + 1
        h += v * (np.cos(k * t) if j % 2 == 0 else np.sin(k * t))
    return SupportFunction(h)


def smoothed_polygon(poly: ConvexPolygon, width: float,
                     n_angles: int = DEFAULT_N_ANGLES) -> SupportFunction:
    """Polygon with its surface-area measure mollified by a wrapped Gaussian.

    The radius of curvature is sampled as ``r = sum_j L_j K_w(theta - phi_j)``
    and inverted mode by mode, ``h_k = r_k / (1 - k^2)``; the first harmonic (a
    translation) is taken from ``h_P``.  Convolution commutes with
    ``h -> h + h''``, so ``r`` is the exact discrete radius of curvature.  Widths
    much below the gap between side normals leave ``r`` numerically zero there.
    """
    if not width > 0:
        raise ValueError("smoothing width must be positive")
    t = AngleGrid(n_angles).theta
    diff = t[:, None] - poly.normal_angles[None, :]
    diff = np.angle(np.exp(1j * diff))
    kern = sum(np.exp(-0.5 * ((diff + 2.0 * np.pi * m) / width) ** 2) for m in (-1, 0, 1))
    r = (kern * poly.edge_lengths[None, :]).sum(axis=1) / (width * np.sqrt(2.0 * np.pi))
    c = np.fft.rfft(r)
    k = np.arange(c.size)
    h_hat = np.zeros_like(c)
    h_hat[0] = c[0]
    h_hat[2:] = c[2:] / (1.0 - k[2:] ** 2)
    dense = np.linspace(0.0, 2.0 * np.pi, _DENSE, endpoint=False)
    h_hat[1] = n_angles * np.mean(poly.support(dense) * np.exp(-1j * dense))
    return SupportFunction(np.fft.irfft(h_hat, n_angles))


def random_body(seed: int, n_angles: int = DEFAULT_N_ANGLES,
                width: float = RANDOM_SMOOTHING) -> SupportFunction:
    """Smoothed random centrally symmetric polygon with 4 or 6 sides.

    The polygon is scaled to area pi, smoothed, and then thickened by a disk of
    radius ``RANDOM_ROUNDING`` so the radius of curvature stays away from zero.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 4))
    # side normals in [0, pi) at least 0.3 rad apart, mirrored by pi
    while True:
        phi = np.sort(rng.uniform(0.0, np.pi, m))
        gaps = np.diff(np.r_[phi, phi[0] + np.pi])
        if gaps.min() > 0.3:
            break
    length = rng.uniform(0.3, 1.5, m)
    phi = np.r_[phi, phi + np.pi]
    length = np.r_[length, length]
    tangent = np.column_stack([-np.sin(phi), np.cos(phi)])
    verts = np.cumsum(length[:, None] * tangent, axis=0)
    verts -= verts.mean(axis=0)
    poly = ConvexPolygon(verts)
    verts = verts * np.sqrt(np.pi / poly.area)
    h = smoothed_polygon(ConvexPolygon(verts), width, n_angles)
    return SupportFunction(h.values + RANDOM_ROUNDING)


def _floats(parts: List[str], spec: str) -> List[float]:
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise BodyFileError(f"fixture {spec!r}: {exc}") from None


def _fourier_terms(arg: str, spec: str) -> List[float]:
    coeffs: List[float] = []
    named = {}
    for tok in filter(None, (t.strip() for t in arg.split(","))):
        if "=" in tok:
            key, val = tok.split("=", 1)
            if len(key) < 2 or key[0] not in "cs" or not key[1:].isdigit() or int(key[1:]) < 1:
                raise BodyFileError(f"fixture {spec!r}: bad term name {key!r}")
            named[(key[0], int(key[1:]))] = _floats([val], spec)[0]
        else:
            coeffs.append(_floats([tok], spec)[0])
    if not coeffs:
        raise BodyFileError(f"fixture {spec!r}: missing constant term")
    kmax = max([k for _, k in named] + [(len(coeffs)) // 2])
    coeffs += [0.0] * (1 + 2 * kmax - len(coeffs))
    for (kind, k), v in named.items():
        coeffs[2 * k - 1 + (kind == "s")] += v
    return coeffs


def fixture(spec: str, n_angles: int = DEFAULT_N_ANGLES) -> Body:
    """Build a named body; see the module docstring for the grammar."""
    name, _, arg = spec.partition(":")
    parts = arg.split(":") if arg else []
    try:
        if name == "disk":
            return disk(*_floats(parts, spec), n_angles=n_angles)
        if name == "ellipse":
            a, b = _floats(parts, spec)
            return ellipse(a, b, n_angles)
        if name == "square":
            (s,) = _floats(parts, spec) or [1.0]
            return rectangle(s, s)
        if name == "rect":
            (ell,) = _floats(parts, spec)
            return rectangle(ell, 1.0)
        if name == "hexagon":
            (r,) = _floats(parts, spec) or [1.0]
            return regular_polygon(6, r)
        if name == "fourier":
            return fourier(_fourier_terms(arg, spec), n_angles)
        if name == "smooth":
            inner, _, w = arg.rpartition(":")
            poly = fixture(inner, n_angles)
            if not isinstance(poly, ConvexPolygon):
                raise BodyFileError(f"fixture {spec!r}: smoothing needs a polygon fixture")
            h = smoothed_polygon(poly, _floats([w], spec)[0], n_angles)
            if not h.is_convex():
                raise BodyFileError(f"fixture {spec!r}: width too small for this grid")
            return h
        if name == "random":
            (seed,) = _floats(parts, spec)
            return random_body(int(seed), n_angles)
    except (TypeError, ValueError) as exc:
        raise BodyFileError(f"fixture {spec!r}: wrong parameters ({exc})") from None
    except GeometryError as exc:
        raise BodyFileError(f"fixture {spec!r}: {exc}") from None
    raise BodyFileError(f"unknown fixture {name!r}")


# --------------------------------------------------------------------------
# JSON files


def body_to_dict(body: Body) -> dict:
    if isinstance(body, ConvexPolygon):
        return {"vertices": body.vertices.tolist()}
    return {"n_angles": body.n_angles, "values": body.values.tolist()}


def write_body(body: Body, path) -> None:
    Path(path).write_text(json.dumps(body_to_dict(body)) + "\n")


def parse_body(text: str, source: str = "<string>") -> Body:
    """Parse and validate a body JSON document; errors name the line or field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BodyFileError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise BodyFileError(f"{source}: top level must be an object")
    if "vertices" in doc:
        v = doc["vertices"]
        if (not isinstance(v, list) or len(v) < 3
                or not all(isinstance(p, list) and len(p) == 2 for p in v)):
            raise BodyFileError(f"{source}: field 'vertices' must be a list of >= 3 [x, y] pairs")
        try:
            return ConvexPolygon(np.array(v, dtype=float))
        except (GeometryError, TypeError, ValueError) as exc:
            raise BodyFileError(f"{source}: field 'vertices': {exc}") from None
    if "values" in doc:
        vals = doc["values"]
        if not isinstance(vals, list) or not all(isinstance(x, (int, float)) for x in vals):
            raise BodyFileError(f"{source}: field 'values' must be a list of numbers")
        n = doc.get("n_angles", len(vals))
        if not isinstance(n, int) or n != len(vals):
            raise BodyFileError(f"{source}: field 'n_angles' ({n!r}) does not match "
                                f"len(values) = {len(vals)}")
        try:
            AngleGrid(n)
            h = SupportFunction(np.array(vals, dtype=float))
            h.check_convex()
        except (GeometryError, ValueError) as exc:
            raise BodyFileError(f"{source}: field 'values': {exc}") from None
        return h
    raise BodyFileError(f"{source}: expected field 'values' or 'vertices'")


def read_body(path) -> Body:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise BodyFileError(f"{p}: {exc.strerror}") from None
    return parse_body(text, str(p))


def load(source: Union[str, Path], n_angles: int = DEFAULT_N_ANGLES) -> Body:
    """Body from a file path (if it exists or ends in .json) or a fixture string."""
    s = str(source)
    if s.endswith(".json") or Path(s).is_file():
        return read_body(s)
    return fixture(s, n_angles)
