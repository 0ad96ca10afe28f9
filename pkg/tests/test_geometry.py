from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from smootharcs.geometry import (
    GRAPH_EPS,
    SQRT2,
    PointSet,
    epsilon_directed,
    extract_nonsquiggly,
    min_direction_spread,
    nonsquiggly_check,
    orient2d,
    rotate_to_graph,
    strictly_inside,
)


def _area2(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _brute_squiggly(pts, delta=math.inf):
    """Exact oracle: some point strictly inside the triangle of three others, diameter <= delta."""
    F = [tuple(Fraction(c) for c in p) for p in pts]
    for quad in itertools.combinations(range(len(F)), 4):
        q = [F[i] for i in quad]
        if not math.isinf(delta):
            if any((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 > Fraction(delta) ** 2 for a, b in itertools.combinations(q, 2)):
                continue
        for t in range(4):
            x, y, z = (q[i] for i in range(4) if i != t)
            s = [_area2(x, y, q[t]), _area2(y, z, q[t]), _area2(z, x, q[t])]
            if all(v > 0 for v in s) or all(v < 0 for v in s):
                return True
    return False


def _grid_spread(X, n=20000):
    i, j = np.triu_indices(len(X), 1)
    d = X[j] - X[i]
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    th = np.arange(n) * math.pi / n
    v = np.column_stack([np.cos(th), np.sin(th)])
    dots = np.abs(d @ v.T).min(axis=0)
    return float(np.sqrt(max(0.0, 2 - 2 * dots.max())))


def test_orientation_exact_near_degenerate():
    a, b = (0.0, 0.0), (1.0, 1.0)
    c = (0.5, math.nextafter(0.5, 1.0))
    assert orient2d(a, b, c) == 1
    assert orient2d(a, b, (0.5, 0.5)) == 0
    assert orient2d(b, a, c) == -1


@settings(max_examples=200, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 3), st.integers(-3, 3))
def test_orientation_matches_fractions_on_nearly_collinear_points(x0, y0, t, ulps):
    a, b = (x0, y0), (x0 + 0.3, y0 + 0.7)
    cy = y0 + 0.7 * t
    for _ in range(abs(ulps)):
        cy = math.nextafter(cy, math.copysign(math.inf, ulps))
    c = (x0 + 0.3 * t, cy)
    want = _area2(*[tuple(Fraction(v) for v in p) for p in (a, b, c)])
    assert orient2d(a, b, c) == (want > 0) - (want < 0)


def test_strictly_inside_excludes_boundary():
    x, y, z = (0, 0), (4, 0), (0, 4)
    assert strictly_inside((1, 1), x, y, z)
    assert not strictly_inside((2, 0), x, y, z)
    assert not strictly_inside((2, 2), x, y, z)
    assert not strictly_inside((1, 1), x, (1, 1), (2, 2))


def test_square_spread_value():
    # largest cyclic gap between the 4 directions mod pi is 45 deg
    sq = [(0, 0), (1, 0), (0, 1), (1, 1)]
    assert min_direction_spread(sq) == pytest.approx(2 * math.sin(math.radians(33.75)), abs=1e-12)


def test_collinear_set_is_zero_directed():
    v = epsilon_directed([(k, 2 * k) for k in range(6)], 0.0)
    assert v.directed and v.spread == pytest.approx(0.0, abs=1e-15)


def test_violating_pair_reported():
    v = epsilon_directed([(0, 0), (1, 0), (0, 1)], 0.1)
    assert not v.directed and v.violating_pair is not None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_planar_spread_matches_grid(seed):
    X = np.random.default_rng(seed).uniform(-1, 1, (8, 2))
    assert min_direction_spread(X) == pytest.approx(_grid_spread(X), abs=2e-4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_every_set_is_sqrt2_directed(seed, dim):
    X = np.random.default_rng(seed).normal(size=(7, dim))
    assert epsilon_directed(X, SQRT2).directed


def test_spread_in_three_dimensions_is_an_upper_bound():
    X = np.random.default_rng(3).normal(size=(6, 3))
    v = epsilon_directed(X, 0.0)
    d = np.array([X[j] - X[i] for i, j in itertools.combinations(range(6), 2)])
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    w = np.array(v.witness)
    worst = float(np.max(np.sqrt(np.clip(2 - 2 * np.abs(d @ w), 0, None))))
    assert worst == pytest.approx(v.spread, abs=1e-9)


def test_convex_position_is_nonsquiggly():
    pts = [(Fraction(k, 10), Fraction(k * k, 100)) for k in range(12)]
    assert nonsquiggly_check(pts).nonsquiggly


def test_interior_point_found():
    v = nonsquiggly_check([(0, 0), (4, 0), (0, 4), (1, 1), (10, 10)])
    assert not v.nonsquiggly
    x, y, z, t = v.witness
    assert strictly_inside(t, x, y, z)


def test_delta_limits_the_quadruples():
    pts = [(0, 0), (4, 0), (0, 4), (1, 1)]
    assert not nonsquiggly_check(pts).nonsquiggly
    assert nonsquiggly_check(pts, delta=1.0).nonsquiggly


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=4, max_size=9, unique=True))
def test_scan_matches_brute_force(pts):
    assert nonsquiggly_check(pts).nonsquiggly == (not _brute_squiggly(pts))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_nonsquiggly_iff_convex_position_for_general_points(seed):
    X = np.random.default_rng(seed).uniform(0, 1, (7, 2))
    hull = ConvexHull(X)
    convex = len(hull.vertices) == len(X)
    assert nonsquiggly_check(X).nonsquiggly == convex


def test_extraction_is_nonsquiggly_and_maximal():
    X = np.random.default_rng(0).uniform(0, 1, (40, 2))
    S = extract_nonsquiggly(X)
    assert len(S) >= 4
    assert nonsquiggly_check(S).nonsquiggly
    chosen = {tuple(p) for p in S.points}
    for p in X:
        if tuple(p) not in chosen:
            assert not nonsquiggly_check(list(S.points) + [tuple(p)]).nonsquiggly
    assert extract_nonsquiggly(S).points == S.points


def test_rotation_into_graph():
    ang = math.radians(70)
    base = [(t, 0.3 * math.sin(3 * t)) for t in np.linspace(0, 1, 9)]
    R = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    P = np.array(base) @ R.T
    frame = rotate_to_graph(P)
    assert np.all(np.diff(frame.xs) > 0)
    dy = np.abs(np.diff(frame.ys[:, 0]))
    assert np.all(dy <= np.diff(frame.xs) * (1 + 1e-9))
    back = frame.to_original(frame.points)
    np.testing.assert_allclose(back, P[list(frame.order)], atol=1e-12)
    assert abs(np.linalg.det(frame.rotation) - 1) < 1e-12


def test_rotation_prefers_identity():
    pts = [(Fraction(k), Fraction(k, 2)) for k in range(5)]
    assert rotate_to_graph(pts, prefer_axis=True).identity
    assert not rotate_to_graph(pts).identity


def test_rotation_rejects_undirected():
    with pytest.raises(ValueError, match="not"):
        rotate_to_graph([(0, 0), (1, 0), (0, 1), (1, 1)])
    assert GRAPH_EPS == pytest.approx(0.7653668647301796)


def test_pointset_validation():
    with pytest.raises(ValueError):
        PointSet(((0, 0), (0, 0)))
    with pytest.raises(ValueError):
        PointSet(((0,),))
    with pytest.raises(ValueError):
        PointSet(((0.0, float("nan")),))
    assert PointSet.of([(Fraction(1, 3), 1)]).exact
