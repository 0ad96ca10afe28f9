from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smootharcs.flatinterp import (
    FlatPathData,
    cantor_arc_data,
    diagonal_shrink_targets,
    flatness_constants,
    flat_bound,
    polygonal_arc_data,
    psi_interpolate,
    reference_sequence,
    verify_flat_bounds,
)

# exact M_alpha for x_j = (2^(-j^2), 0), j < 6, with g(0) = 0 at D = {0} u {2^-j}
REFERENCE_M = (1.0, 1.75, 7.0, 31.0, 248.0, 2032.0, 32512.0)


def _float_flatness(D, G, alpha):
    best = 0.0
    for i, j in itertools.combinations(range(len(D)), 2):
        best = max(best, np.linalg.norm(G[i] - G[j]) / abs(D[i] - D[j]) ** alpha)
    return best


def _rotated(J=6):
    pts = []
    for j in range(J):
        r = Fraction(9, 10) * Fraction(1, 2 ** (j * j))
        th = 0.3 + 0.7 * j
        # rational point of norm at most r, norms strictly decreasing
        c = Fraction(math.cos(th)).limit_denominator(10**6)
        s = Fraction(math.sin(th)).limit_denominator(10**6)
        n = max(abs(c), abs(s)) * 2
        pts.append((r * c / n * Fraction(9, 10), r * s / n * Fraction(9, 10)))
    return pts


def test_reference_sequence_constants():
    arc = polygonal_arc_data(reference_sequence(6))
    assert arc.data.M == pytest.approx(REFERENCE_M, rel=1e-15)
    assert arc.within_bound
    for a, m2 in enumerate(arc.data.flatness.M_sq):
        assert m2 <= flat_bound(a) ** 2
    assert arc.checked_simple and arc.simple


def test_flatness_matches_float_oracle():
    D = [0.0, 0.1, 0.25, 0.5, 1.0]
    G = np.array([[0.0, 0.0], [0.01, 0.02], [0.1, -0.05], [0.3, 0.2], [1.0, 0.0]])
    rep = flatness_constants(D, G, 4)
    for a in range(5):
        assert rep.M[a] == pytest.approx(_float_flatness(D, G, a), rel=1e-12)


def test_flatness_blowup_flag():
    rep = flatness_constants([0, Fraction(1, 1000), 1], [(0,), (1,), (0,)], 3, growth_threshold=100.0)
    assert rep.blowup


def test_flat_bound_values():
    assert [flat_bound(a) for a in range(4)] == [2, 8, 128, 8192]


def test_condition_a_names_index():
    pts = reference_sequence(6)
    pts[3] = (Fraction(1, 2**9), Fraction(0))
    pts[4] = (Fraction(0), Fraction(1, 2**9))  # same norm as x_3
    with pytest.raises(ValueError, match="j=4"):
        polygonal_arc_data(pts)


def test_condition_b_names_index():
    pts = reference_sequence(4)
    pts[2] = (Fraction(1, 2**3), Fraction(0))
    with pytest.raises(ValueError, match="j=2"):
        polygonal_arc_data(pts)


def _resolved_parameters(data, count, seed):
    """Parameters in the middle 80% of each gap, where psi is resolved in double precision."""
    t = np.array([float(p) for p in data.points])
    rng = np.random.default_rng(seed)
    j = rng.integers(0, len(t) - 1, count)
    s = rng.uniform(0.1, 0.9, count)
    return t[j] + s * (t[j + 1] - t[j])


def test_rotated_sequence_is_an_injective_path():
    arc = polygonal_arc_data(_rotated())
    assert arc.simple
    path = psi_interpolate(arc.data)
    u = np.unique(_resolved_parameters(arc.data, 10**4, 0))
    pts = path(u)
    assert len({tuple(p) for p in pts}) == len(u)


def test_cantor_arc_separates_sampled_pairs():
    arc = cantor_arc_data(3)
    path = psi_interpolate(arc.data)
    u1 = _resolved_parameters(arc.data, 10**4, 1)
    u2 = _resolved_parameters(arc.data, 10**4, 2)
    keep = u1 != u2
    d = np.linalg.norm(path(u1[keep]) - path(u2[keep]), axis=1)
    assert np.all(d > 0)


def test_interpolation_identity_on_gaps():
    data = polygonal_arc_data(_rotated(4)).data
    path = psi_interpolate(data)
    t = np.array([float(p) for p in data.points])
    G = np.array([[float(c) for c in v] for v in data.values])
    for j in range(len(t) - 1):
        u = np.linspace(t[j], t[j + 1], 17)[1:-1]
        s = (u - t[j]) / (t[j + 1] - t[j])
        want = G[j] + (G[j + 1] - G[j]) * path.psi(s)[:, None]
        np.testing.assert_allclose(path(u), want, atol=1e-12, rtol=0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_chain_rule_against_finite_differences(k):
    path = psi_interpolate(polygonal_arc_data(reference_sequence(4)).data)
    u = np.array([0.3, 0.6, 0.8])
    h = 1e-6
    fd = (path.derivative(u + h, k - 1) - path.derivative(u - h, k - 1)) / (2 * h)
    np.testing.assert_allclose(path.derivative(u, k), fd, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_derivatives_flatten_at_sample_points(k):
    path = psi_interpolate(polygonal_arc_data(reference_sequence(4)).data)
    t = np.array([float(p) for p in path.data.points])[1:-1]
    assert np.all(path.derivative(t, k) == 0)
    errs = []
    for h in (1e-2, 1e-3, 1e-4):
        fd = (path.derivative(t + h, k - 1) - path.derivative(t - h, k - 1)) / (2 * h)
        errs.append(float(np.max(np.abs(fd))))
    assert errs[2] <= errs[1] <= errs[0]
    assert errs[2] < 1e-6


def test_straight_segment_derivatives_stay_on_the_line():
    data = FlatPathData.build([0, Fraction(1, 2), 1], [(0, 0), (1, 2), (3, 6)], 3)
    path = psi_interpolate(data)
    u = np.linspace(0.01, 0.99, 50)
    for k in range(4):
        d = path.derivative(u, k)
        assert np.allclose(d[:, 1], 2 * d[:, 0], atol=1e-9 * (1 + np.abs(d).max()))


def test_case_bounds_hold_and_expected_failure_shows():
    path = psi_interpolate(polygonal_arc_data(reference_sequence(6)).data)
    rep = verify_flat_bounds(path, k_max=3, samples=1000)
    assert rep.passed
    assert rep.expected_failure_seen
    assert all(r <= 1 for r in rep.worst_ratio)


def test_bounds_need_enough_psi_derivatives():
    from smootharcs.smoothtools import smooth_step

    path = psi_interpolate(polygonal_arc_data(reference_sequence(4)).data, smooth_step(5))
    with pytest.raises(ValueError):
        verify_flat_bounds(path, k_max=3)


def test_cantor_arc_level_two():
    arc = cantor_arc_data(2)
    assert arc.first_coordinate_increasing
    assert len(arc.data.points) == 5
    path = psi_interpolate(arc.data)
    u = np.linspace(0, 1, 2001)
    x = path(u)[:, 0]
    assert np.all(np.diff(x) >= 0)


def test_cantor_arc_level_zero():
    arc = cantor_arc_data(0)
    assert [float(p) for p in arc.data.points] == [0.0, 1.0]


def test_cantor_arc_rejects_large_boxes():
    F = diagonal_shrink_targets(2)
    lo, _ = F[(0,)]
    F[(0,)] = (lo, tuple(c + Fraction(1, 3) for c in lo))
    with pytest.raises(ValueError):
        cantor_arc_data(2, F)


def test_path_data_validation():
    with pytest.raises(ValueError):
        FlatPathData.build([Fraction(1, 2), 1], [(0, 0), (1, 1)])
    with pytest.raises(ValueError):
        flatness_constants([0, 0], [(0,), (1,)])
    with pytest.raises(ValueError):
        polygonal_arc_data([])


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 7))
def test_reference_sequence_within_bound_for_any_truncation(J):
    arc = polygonal_arc_data(reference_sequence(J), alpha_max=4)
    assert arc.within_bound
