from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from smootharcs.constructions import (
    C2AvoidConstruction,
    build_vanishing_derivative_f,
    c1_arc_through,
    c2_avoider,
    second_divided_differences,
    shrink_into_cone,
    square_comparison,
    squiggle_witness_demo,
    star_divergence_test,
    taylor_contradiction_scan,
)
from smootharcs.geometry import nonsquiggly_check
from smootharcs.realsets import ClosedSet, cantor_points, gaps, make_cantor
from smootharcs.smoothtools import smooth_step


@pytest.fixture(scope="module")
def c2() -> C2AvoidConstruction:
    return c2_avoider(5, samples=200)


def test_derivative_vanishes_exactly_on_points():
    D = cantor_points(3)
    f = build_vanishing_derivative_f(D)
    pts = np.array([float(p) for p, _ in D])
    for k in range(1, f.fn.k_max + 1):
        assert np.all(f.fn.derivative(pts, k) == 0)
    mids = np.array([float(a + L / 2) for a, L in zip(f.gap_left, f.gap_len)])
    assert np.all(f.fn.derivative(mids, 1) > 0)
    assert not f.degenerate


def test_value_is_integral_of_derivative():
    D = cantor_points(2)
    f = build_vanishing_derivative_f(D, increments=[Fraction(1, 10)] * len(gaps(D, (0, 1))))
    a, L = float(f.gap_left[2]), float(f.gap_len[2])
    x = a + 0.37 * L
    want = quad(lambda s: f.fn.derivative(s, 1), a, x, epsabs=1e-15)[0]
    assert f(x) - f(a) == pytest.approx(want, rel=1e-9)


def test_exact_values_on_D_with_rational_increments():
    D = cantor_points(2)
    incs = [Fraction(k + 1, 7) for k in range(len(gaps(D, (0, 1))))]
    f = build_vanishing_derivative_f(D, increments=incs)
    # anchored at the ambient left end, so f(d) sums the increments to the left
    for p, _ in D:
        want = sum((d for a, d in zip(f.gap_left, incs) if a < p), Fraction(0))
        assert f.value_on_D(p) == want
        assert f(float(p)) == pytest.approx(float(want), abs=1e-15)
    with pytest.raises(ValueError):
        f.value_on_D(Fraction(1, 2))


def test_whole_interval_is_degenerate():
    f = build_vanishing_derivative_f(make_cantor(0))
    assert f.degenerate
    assert np.all(f(np.linspace(0, 1, 11)) == 0)


def test_single_point():
    f = build_vanishing_derivative_f(ClosedSet.from_points([Fraction(1, 2)]))
    xs = np.linspace(0.01, 0.99, 99)
    assert np.all((f.fn.derivative(xs, 1) > 0) == (xs != 0.5))
    assert np.all(np.diff(f(xs)) >= 0)


def test_increment_count_checked():
    with pytest.raises(ValueError):
        build_vanishing_derivative_f(cantor_points(2), increments=[1])


def test_inverse_round_trip_on_points_and_gaps(c2):
    f = c2.f
    pts = np.array([float(p) for p in c2.D_points])
    np.testing.assert_allclose(c2.phi(np.array([float(k) for k in c2.K])), pts, atol=1e-12)
    dpsi_min = float(smooth_step(1).derivative(0.1, 1))
    for j in (0, 5, 17):
        a, L, d = float(f.gap_left[j]), float(f.gap_len[j]), float(f.increments[j])
        x = a + np.linspace(0.1, 0.9, 9) * L
        y = f(x)
        # rounding y moves the normalised coordinate by eps |y| / Delta, which phi scales by L / psi'
        cond = 8 * np.spacing(np.max(np.abs(y))) / d * L / dpsi_min
        np.testing.assert_allclose(c2.phi(y), x, rtol=0, atol=cond + 1e-15)


def test_psi_on_K_is_convex_and_exact(c2):
    assert c2.P.exact and len(c2.P) == 32
    rows = second_divided_differences(list(zip(c2.K, c2.psi_K)))
    assert all(dd > 0 for _, dd in rows)


def test_psi_matches_quadrature_of_phi(c2):
    j = c2.f.gap_left.index(c2.D_points[3])
    F, d = float(c2.f.offsets[j]), float(c2.f.increments[j])
    y = F + 0.6 * d
    want = quad(lambda v: c2.phi(v), F, y, epsabs=0, epsrel=1e-12)[0]
    got = c2.psi_values([y])[0] - float(c2.psi_K[3])
    assert got == pytest.approx(want, rel=1e-9)
    assert c2.psi_at(y) == pytest.approx(c2.psi_values([y])[0], rel=1e-12)


def test_supporting_line_inequalities_near_K(c2):
    rng = np.random.default_rng(0)
    for i in (3, 12, 20):
        x = float(c2.K[i])
        r = 5 * float(max(c2.f.increments[1:-1]))
        lo, hi = x - r, x + r
        M = c2.local_M(lo, hi)
        assert M > 0
        for _ in range(20):
            a, b = np.sort(rng.uniform(lo, hi, 2))
            h = b - a
            area = c2.integral_phi_minus(a, h, shift=0.0)
            assert h * c2.phi(a) + h * h * M / 2 <= area * (1 + 1e-12)
            assert area <= (h * c2.phi(b) - h * h * M / 2) * (1 + 1e-12)


def test_quotient_blows_up_on_K(c2):
    for i in (0, 9, 31):
        tab = star_divergence_test(c2, c2.K[i])
        assert tab.Q[-1] > 1e3
        assert tab.increasing_tail


def test_quotient_inside_a_gap_tends_to_half_derivative(c2):
    inner = range(1, len(c2.f.increments) - 1)
    j = max(inner, key=lambda n: c2.f.increments[n])
    a, L = float(c2.f.gap_left[j]), float(c2.f.gap_len[j])
    F, d = float(c2.f.offsets[j]), float(c2.f.increments[j])
    y = F + 0.5 * d
    s = float(smooth_step(1).derivative(0.5, 1))
    want = L / (d * s) / 2
    tab = star_divergence_test(c2, y, [d * 1e-2, d * 1e-3])
    assert tab.Q[-1] == pytest.approx(want, rel=1e-2)


def test_control_quotient_is_one():
    tab = star_divergence_test(square_comparison(), 0.3)
    assert all(abs(q - 1) < 1e-3 for q in tab.Q)


def test_quotient_argument_checks(c2):
    with pytest.raises(ValueError):
        star_divergence_test(c2, c2.K[0], [1e-3, 1e-2])
    with pytest.raises(ValueError):
        star_divergence_test(c2, c2.K[0], [0.0])
    with pytest.raises(ValueError):
        star_divergence_test(c2, c2.K[5], [1e-2, 1e-21])


def test_taylor_scan(c2):
    scan = taylor_contradiction_scan(c2)
    assert scan.all_above_threshold and scan.grows
    assert scan.max_dd > 1e6 * scan.min_dd
    square = taylor_contradiction_scan([(Fraction(k, 10), Fraction(k * k, 100)) for k in range(10)])
    assert square.min_dd == square.max_dd == 1.0 and not square.grows
    line = taylor_contradiction_scan([(k, 3 * k + 1) for k in range(6)])
    assert line.max_dd == 0 and not line.all_above_threshold
    with pytest.raises(ValueError):
        taylor_contradiction_scan(c2, window=(10, 11))


def test_convex_set_is_nonsquiggly(c2):
    assert nonsquiggly_check(c2.P).nonsquiggly


def test_graph_of_f_has_squiggle_witness():
    demo = squiggle_witness_demo(5)
    assert not demo.verdict.nonsquiggly and demo.note is None
    shallow = squiggle_witness_demo(1)
    assert shallow.verdict.nonsquiggly and "deeper" in shallow.note


def test_ambient_check():
    with pytest.raises(ValueError):
        c2_avoider(ClosedSet.from_points([-1, 0, 1]))
    with pytest.raises(ValueError):
        c2_avoider(make_cantor(2))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.fractions(-3, 3, max_denominator=50), st.fractions(-3, 3, max_denominator=50)), min_size=2, max_size=10, unique_by=lambda p: p[0]))
def test_cone_shrink_round_trip(pts):
    out, sh = shrink_into_cone(pts)
    assert sorted(sh.invert(out)) == sorted((Fraction(x), Fraction(y)) for x, y in pts)
    slopes = [(y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(out, out[1:])]
    assert max(abs(s) for s in slopes) <= Fraction(27, 100)


def test_arc_through_parabola_sample():
    xs = make_cantor(4, (0, Fraction(2, 5))).endpoints()
    arc = c1_arc_through([(x, x * x) for x in xs], 6)
    assert arc.max_interp_error == 0 and arc.frame.identity
    err = max(abs(h[0] - 2 * float(x)) for x, h in zip(arc.xs, arc.slopes))
    assert err <= 2.0**-6 + arc.mesh
    c = arc.continuity_errors([1e-3, 1e-4, 1e-5])
    assert c[0] > c[1] > c[2]


def test_arc_through_rotated_sample():
    th = math.radians(65)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    t = np.linspace(0, 0.4, 12)
    P = np.column_stack([t, 0.5 * t * t]) @ R.T
    arc = c1_arc_through(P, 5)
    assert not arc.frame.identity
    assert arc.max_interp_error < 1e-9
    x0 = float(arc.xs[4])
    assert np.linalg.norm(arc(x0) - P[arc.frame.order[4]]) < 1e-9


def test_arc_through_convex_construction(c2):
    pts, _ = shrink_into_cone(list(zip(c2.K, c2.psi_K)))
    arc = c1_arc_through(pts, 6)
    assert arc.max_interp_error == 0


def test_arc_rejects_undirected_sample():
    with pytest.raises(ValueError):
        c1_arc_through([(0, 0), (1, 0), (0, 1), (1, 1)])
