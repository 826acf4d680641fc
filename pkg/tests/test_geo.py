import math

import pytest
from hypothesis import given, strategies as st

from busmob.errors import DegenerateSegmentError, InsufficientPointsError, InvalidCoordinateError
from busmob.geo import (
    CartPoint,
    GeoPoint,
    ProjectionContext,
    densify,
    point_segment_distance,
    project_onto_segment,
    to_cartesian,
    to_geographic,
)

# 6 371 000 m * 0.001 deg * pi / 180
MILLIDEGREE_M = 6_371_000.0 * 0.001 * math.pi / 180.0

coord = st.floats(-1e4, 1e4, allow_nan=False)
points = st.builds(CartPoint, coord, coord)


def test_origin_maps_to_zero():
    assert to_cartesian(GeoPoint(0, 0), ProjectionContext()) == (0.0, 0.0)


def test_millidegree_north():
    x, y = to_cartesian(GeoPoint(0.001, 0), ProjectionContext())
    assert x == pytest.approx(0.0, abs=0.01)
    assert y == pytest.approx(111.19, abs=0.01)
    assert y == pytest.approx(MILLIDEGREE_M, abs=1e-9)


def test_millidegree_west():
    x, y = to_cartesian(GeoPoint(0, -0.001), ProjectionContext())
    assert x == pytest.approx(-111.19, abs=0.01)
    assert y == pytest.approx(0.0, abs=0.01)


def test_longitude_shrinks_with_latitude():
    ctx = ProjectionContext(GeoPoint(60.0, 10.0))
    x, _ = to_cartesian(GeoPoint(60.0, 10.001), ctx)
    assert x == pytest.approx(MILLIDEGREE_M * 0.5, rel=1e-12)


@pytest.mark.parametrize("bad", [GeoPoint(float("nan"), 0), GeoPoint(0, float("inf")), GeoPoint(91, 0), GeoPoint(0, -181)])
def test_invalid_coordinates(bad):
    with pytest.raises(InvalidCoordinateError):
        to_cartesian(bad, ProjectionContext())


@given(
    st.floats(-60, 60),
    st.floats(-170, 170),
    st.floats(-0.5, 0.5),
    st.floats(-0.5, 0.5),
)
def test_inverse_consistent(lat0, lon0, dlat, dlon):
    ctx = ProjectionContext(GeoPoint(lat0, lon0))
    p = GeoPoint(lat0 + dlat, lon0 + dlon)
    back = to_geographic(to_cartesian(p, ctx), ctx)
    assert abs(back.lat - p.lat) < 1e-9
    assert abs(back.lon - p.lon) < 1e-9


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_injective_on_window(a, b, c, d):
    ctx = ProjectionContext(GeoPoint(-25.0, -49.0))
    p, q = GeoPoint(-25 + a, -49 + b), GeoPoint(-25 + c, -49 + d)
    if p != q:
        assert to_cartesian(p, ctx) != to_cartesian(q, ctx)


def test_densify_examples():
    assert densify([(0, 0), (10, 0)]) == [(0, 0), (5, 0), (10, 0)]
    assert len(densify([(0, 0), (1, 0), (2, 0), (3, 0)])) == 7
    assert densify([(0, 0), (2, 2), (4, 0)]) == [(0, 0), (1, 1), (2, 2), (3, 1), (4, 0)]


def test_densify_repeat():
    assert densify([(0, 0), (8, 0)], passes=2) == [(0, 0), (2, 0), (4, 0), (6, 0), (8, 0)]


@pytest.mark.parametrize("pts", [[], [(1, 1)]])
def test_densify_too_short(pts):
    with pytest.raises(InsufficientPointsError):
        densify(pts)


@given(st.lists(points, min_size=2, max_size=50))
def test_densify_structure(pts):
    out = densify(pts)
    assert len(out) == 2 * len(pts) - 1
    assert out[::2] == pts
    for i in range(len(pts) - 1):
        assert out[2 * i + 1] == ((pts[i][0] + pts[i + 1][0]) / 2, (pts[i][1] + pts[i + 1][1]) / 2)


def test_point_segment_distance_examples():
    assert point_segment_distance((5, 3), (0, 0), (10, 0)) == 3
    assert point_segment_distance((13, 4), (0, 0), (10, 0)) == 5
    assert point_segment_distance((7, 0), (0, 0), (10, 0)) == 0


def test_degenerate_segment():
    with pytest.raises(DegenerateSegmentError):
        point_segment_distance((1, 1), (2, 2), (2, 2))
    with pytest.raises(DegenerateSegmentError):
        project_onto_segment((1, 1), (2, 2), (2, 2))


@given(points, points, points)
def test_distance_symmetric(p, a, b):
    if a != b:
        assert point_segment_distance(p, a, b) == point_segment_distance(p, b, a)
        assert point_segment_distance(p, a, b) >= 0


def test_project_examples():
    assert project_onto_segment((5, 3), (0, 0), (10, 0)) == (5, (5, 0))
    assert project_onto_segment((-2, 1), (0, 0), (10, 0)) == (0, (0, 0))
    off, foot = project_onto_segment((55, 3), (0, 0), (100, 0))
    assert off == pytest.approx(55)
    assert foot == pytest.approx((55, 0))


def _sampled_argmin(p, a, b, step_frac=0.01):
    """Numerical minimiser of |p - (a + s * u)| over s in [0, |ab|].

    Dense sampling at step_frac * |ab| brackets the minimum, ternary search refines it.
    """
    length = math.dist(a, b)
    ux, uy = (b[0] - a[0]) / length, (b[1] - a[1]) / length

    def f(s):
        return math.dist(p, (a[0] + s * ux, a[1] + s * uy))

    n = round(1 / step_frac)
    k = min(range(n + 1), key=lambda k: f(k * length / n))
    lo, hi = max(0.0, (k - 1) * length / n), min(length, (k + 1) * length / n)
    for _ in range(200):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    return (lo + hi) / 2


@given(points, points, points)
def test_projection_is_argmin(p, a, b):
    length = math.dist(a, b)
    if length < 1e-3:
        return
    off, foot = project_onto_segment(p, a, b)
    assert 0.0 <= off <= length * (1 + 1e-12)
    assert abs(off - _sampled_argmin(p, a, b)) <= 1e-6 * length


def test_tiny_segment_is_not_degenerate():
    a, b = CartPoint(0.0, 0.0), CartPoint(0.0, 2.7764223828804034e-236)
    assert point_segment_distance(CartPoint(0.0, 0.0), a, b) == 0.0
    assert point_segment_distance(CartPoint(3.0, 0.0), a, b) == 3.0
    assert project_onto_segment(CartPoint(0.0, 1.0), a, b)[1] == b
