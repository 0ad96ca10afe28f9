from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from smootharcs.realsets import ClosedSet, cantor_points, make_cantor
from smootharcs.smoothtools import (
    QuadratureError,
    bump_complement,
    bump_interval,
    integrate,
    invert_monotone,
    smooth_step,
    step_inverse,
    step_normalizer,
    unit_bump,
    unit_bump_sups,
)

# frozen with scipy.integrate.quad and sympy (30 digits) on exp(-1/(s(1-s)))
NORMALIZER = 0.007029858406609657
STEP_VALUES = {0.1: 1.8097865303854702e-05, 0.25: 0.03175495772763777, 0.4: 0.2530182852297122}
UNIT_BUMP_AT_03 = (0.008549309479686051, 0.07754475718536101, 0.020221421941760808, -6.089831836752463, 20.765855602960794)
BUMP_02_05_SECOND_AT_03 = 1.0608124163801547e-17
UNIT_BUMP_SUPS = (0.018315638888734165, 0.0775784604316703, 0.5907573342479141, 8.365550901011378)


def test_unit_bump_derivatives_match_symbolic():
    h = unit_bump(4)
    for k, want in enumerate(UNIT_BUMP_AT_03):
        assert h.derivative(0.3, k) == pytest.approx(want, rel=1e-12)


def test_shifted_bump_second_derivative():
    assert bump_interval(0.2, 0.5, 2).derivative(0.3, 2) == pytest.approx(BUMP_02_05_SECOND_AT_03, rel=1e-10)


def test_unit_bump_sups():
    sups = unit_bump_sups()
    for k, want in enumerate(UNIT_BUMP_SUPS):
        assert sups[k] == pytest.approx(want, rel=1e-6)


def test_bump_vanishes_outside_support_to_high_order():
    h = bump_interval(-1, 2, 20)
    x = np.array([-3.0, -1.0, 2.0, 5.0])
    for k in range(21):
        assert np.all(h.derivative(x, k) == 0)


def test_short_gap_derivatives_do_not_overflow():
    h = bump_interval(0, 1e-4, 8)
    v = h.derivative(np.linspace(0, 1e-4, 1001), 8)
    assert np.all(np.isfinite(v))


def test_bump_rejects_bad_arguments():
    with pytest.raises(ValueError):
        bump_interval(1, 1)
    with pytest.raises(ValueError):
        bump_interval(0, 1, 21)
    with pytest.raises(ValueError):
        unit_bump(2).derivative(0.5, 3)


@pytest.mark.parametrize("level", [1, 3, 6])
def test_complement_vanishes_exactly_on_cantor_set(level):
    D = make_cantor(level)
    B = bump_complement(D, (0, 1))
    h = B.as_smooth()
    ends = np.array([float(x) for x in D.endpoints()])
    mids = np.array([(a + b) / 2 for a, b in B.intervals])
    inner = np.array([float(l + (r - l) / 3) for l, r in D])
    for k in range(B.k_max + 1):
        assert np.all(h.derivative(ends, k) == 0)
        assert np.all(h.derivative(inner, k) == 0)
    assert np.all(h(mids) > 0)


def test_complement_of_single_point():
    D = ClosedSet.from_points([Fraction(1, 2)])
    h = bump_complement(D, (0, 1)).as_smooth()
    xs = np.linspace(0.001, 0.999, 999)
    assert np.all((h(xs) > 0) == (xs != 0.5))


def test_complement_of_whole_interval_is_zero():
    h = bump_complement(make_cantor(0), (0, 1)).as_smooth()
    assert np.all(h(np.linspace(-1, 2, 31)) == 0)


def test_default_weights_make_derivative_series_converge():
    D = cantor_points(6)
    B = bump_complement(D, (0, 1), 6)
    sups = unit_bump_sups()
    for k in range(7):
        total = sum(c * (b - a) ** (-k) * sups[k] for c, (a, b) in zip(B.weights, B.intervals))
        assert total <= 1.0


def test_weights_override_and_mismatch():
    D = cantor_points(1)
    B = bump_complement(D, (0, 1), weights=[1.0, 2.0])
    assert B.weights == (1.0, 2.0)
    with pytest.raises(ValueError):
        bump_complement(D, (0, 1), weights=[1.0])
    with pytest.raises(ValueError):
        bump_complement(D, (0, 1), weights=[1.0, 0.0])


def test_step_normalizer_and_values():
    assert step_normalizer() == pytest.approx(NORMALIZER, rel=1e-13)
    psi = smooth_step(3)
    for t, want in STEP_VALUES.items():
        assert psi(t) == pytest.approx(want, rel=1e-10)
        assert psi(1 - t) == pytest.approx(1 - want, rel=1e-12)


def test_step_endpoints_and_flatness():
    psi = smooth_step(6)
    assert psi(0.0) == 0.0 and psi(1.0) == 1.0
    assert psi(-3.0) == 0.0 and psi(4.0) == 1.0
    for k in range(1, 7):
        assert psi.derivative(0.0, k) == 0.0 and psi.derivative(1.0, k) == 0.0


def test_step_derivative_is_normalized_bump():
    psi = smooth_step(2)
    h = unit_bump(1)
    t = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(psi.derivative(t, 1), h(t) / NORMALIZER, rtol=1e-12)
    np.testing.assert_allclose(psi.derivative(t, 2), h.derivative(t, 1) / NORMALIZER, rtol=1e-12)


def test_step_sup_table():
    psi = smooth_step(4)
    assert psi.sup[0] == 1.0
    t = np.linspace(0, 1, 20001)
    for k in range(1, 5):
        grid = float(np.max(np.abs(psi.derivative(t, k))))
        assert grid <= psi.sup[k] * (1 + 1e-9)
        assert grid >= psi.sup[k] * (1 - 1e-4)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0))
def test_step_inverse_round_trip(r):
    psi = smooth_step(1)
    t = float(step_inverse(np.array([r]))[0])
    assert abs(psi(t) - r) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_step_is_monotone(a, b):
    psi = smooth_step(0)
    lo, hi = min(a, b), max(a, b)
    assert psi(lo) <= psi(hi)


def test_integrate_against_scipy():
    f = lambda x: np.exp(-x * x) * np.cos(3 * x)
    want = quad(f, -1.0, 2.5, epsabs=1e-14)[0]
    assert integrate(f, -1.0, 2.5) == pytest.approx(want, abs=1e-12)
    with pytest.raises(ValueError):
        integrate(f, 2.5, -1.0)
    assert integrate(f, 1.0, 1.0) == 0.0


def test_integrate_reports_failure():
    with pytest.raises(QuadratureError):
        integrate(lambda x: 1 / np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, tol=1e-15, max_depth=4)


def test_invert_monotone():
    f = smooth_step(1)
    x = invert_monotone(f, 0.7, (0.0, 1.0))
    assert abs(f(x) - 0.7) <= 1e-12
    with pytest.raises(ValueError):
        invert_monotone(f, 1.5, (0.0, 1.0))
    with pytest.raises(ValueError):
        invert_monotone(lambda x: np.sin(6 * x), 0.5, (0.0, 3.0))


def test_normalizer_independent_quadrature():
    h = lambda s: math.exp(-1 / (s * (1 - s))) if 0 < s < 1 else 0.0
    assert quad(h, 0, 1, epsabs=1e-17, limit=200)[0] == pytest.approx(step_normalizer(), rel=1e-10)
