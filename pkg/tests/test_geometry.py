import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ellipse_perimeter, shoelace
from wornstones.bodies import disk, ellipse, rectangle, regular_polygon
from wornstones.errors import (
    DegenerateIntersection,
    GridMismatch,
    NonConvex,
    OriginOutside,
)
from wornstones.geometry import (
    AngleGrid,
    ConvexPolygon,
    SupportFunction,
    as_support,
    boundary_point,
    centroid,
    centroid_and_center,
    curvature_radius,
    gauss_curvature,
    hausdorff_distance,
    log_minkowski_combination,
    lowpass,
    min_width,
    minkowski_sum,
    perimeter,
    polar_volume,
    polygon_from_support,
    resample,
    summarize,
    support_from_polygon,
    trig_evaluate,
    volume,
    wulff_polygon,
)


def square(side=1.0):
    return rectangle(side, side)


# -- grid and constructors ---------------------------------------------------


@pytest.mark.parametrize("n", [15, 17, 8, 0])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        AngleGrid(n)


def test_grid_closed_under_antipode():
    t = AngleGrid(64).theta
    assert np.allclose(np.mod(t + np.pi, 2 * np.pi), np.roll(t, -32))


def test_support_function_rejects_nonpositive_values():
    v = np.ones(32)
    v[3] = 0.0
    with pytest.raises(OriginOutside):
        SupportFunction(v)


def test_polygon_rejects_clockwise():
    with pytest.raises(NonConvex):
        ConvexPolygon(np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float) - 0.5)


# -- support_from_polygon --------------------------------------------------------


def test_unit_square_support_at_zero():
    h = support_from_polygon(square(1.0))
    assert h.values[0] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("n", [3, 5, 6, 12])
def test_regular_polygon_support_range(n):
    h = support_from_polygon(regular_polygon(n, 1.0), AngleGrid(2048))
    assert h.values.max() == pytest.approx(1.0, abs=1e-5)
    assert h.values.min() == pytest.approx(np.cos(np.pi / n), abs=1e-5)


def test_square_corner_support():
    assert square(2.0).support(np.pi / 4) == pytest.approx(np.sqrt(2.0), rel=1e-15)


def test_support_from_polygon_needs_origin_inside():
    with pytest.raises(OriginOutside):
        support_from_polygon(square(1.0).translated([2.0, 0.0]))


# -- boundary_point ------------------------------------------------------------------


@pytest.mark.parametrize("theta", [0.0, 0.7, 2.0, 4.5])
def test_disk_boundary_point(theta):
    R = 1.7
    assert np.allclose(boundary_point(disk(R), theta), R * np.array([np.cos(theta), np.sin(theta)]))


def test_ellipse_axis_point():
    assert np.allclose(boundary_point(ellipse(2.0, 1.0), 0.0), [2.0, 0.0], atol=1e-12)


def test_shifted_disk_boundary_point():
    R, c = 1.0, 0.3
    h = SupportFunction(R + c * np.cos(AngleGrid().theta))
    assert np.allclose(boundary_point(h, np.pi / 2), [c, R], atol=1e-12)


def test_boundary_point_has_given_support():
    h = ellipse(1.5, 0.8)
    t = np.linspace(0, 2 * np.pi, 37)
    x = boundary_point(h, t)
    assert np.allclose(x[:, 0] * np.cos(t) + x[:, 1] * np.sin(t), trig_evaluate(h.values, t), atol=1e-12)


def test_boundary_point_refuses_nonconvex():
    h = SupportFunction(1.0 + 0.2 * np.cos(3 * AngleGrid().theta))  # r = 1 - 1.6 cos 3t
    with pytest.raises(NonConvex):
        boundary_point(h, 0.0)


# -- polygon_from_support ---------------------------------------------------------


def test_constant_support_gives_regular_polygon():
    p = polygon_from_support(disk(1.0, 64))
    assert len(p.vertices) == 64
    assert np.allclose(np.linalg.norm(p.vertices, axis=1), 1.0)


def test_ellipse_round_trip():
    h = ellipse(2.0, 1.0)
    back = support_from_polygon(polygon_from_support(h), h.grid)
    assert np.max(np.abs(back.values - h.values)) <= 1e-3


def test_square_wulff_realization():
    h = support_from_polygon(square(1.0))
    p = polygon_from_support(h)
    assert p.area == pytest.approx(1.0, abs=2 * np.pi / h.n_angles)
    assert np.max(np.abs(p.support(h.theta) - h.values)) <= 2 * np.pi / h.n_angles


def test_round_trip_error_is_second_order():
    errs = []
    for n in (64, 128):
        h = ellipse(2.0, 1.0, n)
        p = polygon_from_support(h, method="spectral")
        dense = np.linspace(0, 2 * np.pi, 4001)
        exact = np.hypot(2.0 * np.cos(dense), np.sin(dense))
        errs.append(np.max(np.abs(p.support(dense) - exact)))
    assert errs[0] / errs[1] >= 3.0


# -- Minkowski and log-Minkowski --------------------------------------------------


def test_minkowski_sum_of_disks():
    assert np.allclose(minkowski_sum(disk(1.0), disk(2.5)).values, 3.5)


def test_minkowski_identity_with_tiny_body():
    h = ellipse(1.3, 0.7)
    # {0} is not admissible (h = 0); a vanishing disk is the closest valid stand-in
    assert np.allclose(minkowski_sum(h, disk(1e-300)).values, h.values)


def test_rounded_square_is_additive():
    hs = support_from_polygon(square(1.0))
    out = minkowski_sum(hs, disk(0.2))
    assert np.allclose(out.values, hs.values + 0.2)


def test_minkowski_grid_mismatch():
    with pytest.raises(GridMismatch):
        minkowski_sum(disk(1.0, 32), disk(1.0, 64))


@pytest.mark.parametrize("body", [lambda: disk(1.0), lambda: ellipse(1.5, 1.0)])
def test_volume_homogeneity_under_doubling(body):
    h = body()
    assert volume(minkowski_sum(h, h)) == pytest.approx(4.0 * volume(h), rel=1e-8)


def test_log_minkowski_endpoints_and_idempotence():
    a, b = ellipse(1.5, 1.0), disk(1.0)
    assert log_minkowski_combination(a, b, 0.0) is a
    assert np.allclose(log_minkowski_combination(a, a, 0.4).values, a.values, atol=1e-9)


@pytest.mark.parametrize("l1,l2,lam", [(1.0, 4.0, 0.5), (0.5, 2.0, 0.25), (2.0, 1.0, 0.75)])
def test_log_minkowski_of_rectangles_is_rectangle(l1, l2, lam):
    g = AngleGrid(256)
    h1 = support_from_polygon(rectangle(l1, 1.0), g)
    h2 = support_from_polygon(rectangle(l2, 1.0), g)
    ell = l1 ** (1 - lam) * l2**lam
    out = log_minkowski_combination(h1, h2, lam)
    assert np.allclose(out.values, support_from_polygon(rectangle(ell, 1.0), g).values, atol=1e-9)


def test_log_minkowski_below_mean_and_arithmetic_combination():
    a, b = ellipse(1.4, 0.9), support_from_polygon(regular_polygon(6, 1.2))
    lam = 0.3
    out = log_minkowski_combination(a, b, lam).values
    geo = a.values ** (1 - lam) * b.values**lam
    assert np.all(out <= geo + 1e-12)
    assert np.all(out <= (1 - lam) * a.values + lam * b.values + 1e-12)


def test_log_minkowski_monotone_in_argument():
    a, b, big = ellipse(1.4, 0.9), disk(1.0), disk(1.2)
    small = log_minkowski_combination(a, b, 0.5).values
    large = log_minkowski_combination(a, big, 0.5).values
    assert np.all(small <= large + 1e-12)


def test_degenerate_intersection_detected():
    # a slab of width 2e-20 around the y axis has no interior at this scale
    v = np.ones(16)
    v[[0, 8]] = 1e-20
    with pytest.raises(DegenerateIntersection):
        wulff_polygon(v)


# -- volume, curvature, polar ----------------------------------------------------


def test_disk_volume():
    assert volume(disk(1.3)) == pytest.approx(np.pi * 1.69, rel=1e-13)


def test_square_volume_polygon_path():
    assert volume(square(1.0)) == 1.0


def test_ellipse_volume_matches_fine_shoelace():
    h = ellipse(2.0, 1.0)
    t = np.linspace(0, 2 * np.pi, 200001)[:-1]
    assert volume(h) == pytest.approx(shoelace(np.column_stack([2 * np.cos(t), np.sin(t)])), rel=1e-6)
    assert volume(h) == pytest.approx(2 * np.pi, rel=1e-6)


def test_ellipse_perimeter():
    assert perimeter(ellipse(2.0, 1.0)) == pytest.approx(ellipse_perimeter(2.0, 1.0), rel=1e-9)


def test_curvature_of_disk():
    h = disk(2.0)
    assert np.allclose(curvature_radius(h), 2.0)
    assert np.allclose(gauss_curvature(h), 0.5)


def test_ellipse_curvature_radius_at_axis():
    a, b = 2.0, 1.0
    assert curvature_radius(ellipse(a, b))[0] == pytest.approx(b * b / a, rel=1e-9)


def test_curvature_of_single_mode():
    t = AngleGrid().theta
    h = SupportFunction(1.0 + 0.1 * np.cos(3 * t))
    assert np.allclose(curvature_radius(h), 1.0 - 0.8 * np.cos(3 * t), atol=1e-12)


@pytest.mark.parametrize("R", [1.0, 0.5, 3.0])
def test_disk_polar_volume(R):
    assert polar_volume(disk(R)) == pytest.approx(np.pi / R**2, rel=1e-13)


def test_square_polar_volume():
    assert polar_volume(square(2.0)) == pytest.approx(2.0, rel=1e-13)
    assert polar_volume(support_from_polygon(square(2.0), AngleGrid(4096))) == pytest.approx(2.0, rel=1e-2)


# -- metrics and centering --------------------------------------------------------


def test_hausdorff_basic():
    assert hausdorff_distance(disk(1.0), disk(1.0)) == 0.0
    assert hausdorff_distance(disk(1.0), disk(1.1)) == pytest.approx(0.1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.03, 0.03), min_size=9, max_size=9))
def test_hausdorff_triangle_inequality(c):
    t = AngleGrid(64).theta
    bodies = [SupportFunction(1 + c[3 * j] * np.cos(2 * t) + c[3 * j + 1] * np.sin(3 * t) + c[3 * j + 2])
              for j in range(3)]
    a, b, d = bodies
    assert hausdorff_distance(a, d) <= hausdorff_distance(a, b) + hausdorff_distance(b, d) + 1e-15


@pytest.mark.parametrize("body,expected", [
    (lambda: disk(1.5), 3.0),
    (lambda: rectangle(3.0, 1.0), 1.0),
    (lambda: ellipse(2.0, 1.0), 2.0),
])
def test_min_width(body, expected):
    assert min_width(body()) == pytest.approx(expected, rel=1e-12)


def test_centered_disk_unchanged():
    _, h = centroid_and_center(disk(1.0))
    assert np.allclose(h.values, 1.0)


def test_shift_removed():
    _, h = centroid_and_center(disk(1.0).translated([0.3, 0.0]))
    assert np.allclose(h.values, 1.0, atol=1e-12)


def test_centering_is_idempotent():
    rng = np.random.default_rng(4)
    ang = np.sort(rng.uniform(0, 2 * np.pi, 7))
    poly = ConvexPolygon(np.column_stack([np.cos(ang), np.sin(ang)]) * rng.uniform(0.8, 1.2))
    _, centered = centroid_and_center(poly)
    _, again = centroid_and_center(centered)
    diam = summarize(centered).diameter
    assert np.linalg.norm(centroid(again)) <= 1e-8 * diam
    assert np.allclose(again.vertices, centered.vertices, atol=1e-8 * diam)


def test_summary_fields():
    s = summarize(ellipse(2.0, 1.0))
    assert s.volume == pytest.approx(2 * np.pi, rel=1e-6)
    assert s.min_width <= s.diameter
    assert s.is_centrally_symmetric


# -- spectral helpers ------------------------------------------------------------------


def test_resample_is_exact_for_band_limited():
    t = AngleGrid(32).theta
    h = SupportFunction(1 + 0.1 * np.cos(2 * t))
    out = resample(h, 128)
    assert np.allclose(out.values, 1 + 0.1 * np.cos(2 * out.theta))


def test_lowpass_reports_removed_energy():
    t = AngleGrid(64).theta
    v = 1 + 0.01 * np.cos(20 * t)
    out, removed = lowpass(v, 10)
    assert np.allclose(out, 1.0)
    assert removed == pytest.approx(0.01**2 * np.pi, rel=1e-12)


def test_as_support_passthrough():
    h = disk(1.0)
    assert as_support(h) is h
