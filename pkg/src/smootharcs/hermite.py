"""Bounded cubic Hermite segments and C^1 extension from a closed set.

The segment through (a1, b1), (a2, b2) with end slopes s1, s2 is written as
the secant line L plus two cubic correction terms,

    f(x) = L(x) + beta2 (x - a1)^2 (x - a2) + beta1 (x - a1) (x - a2)^2,
    beta_i = (s_i - s) / (a2 - a1)^2,

which keeps |f' - s| <= 3M and |f - L| <= 2M (a2 - a1) where M is the larger
deviation of the end slopes from the secant slope s.  Everything works with
Fractions (exact) as well as floats.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .realsets import ClosedSet, Real, as_fraction, gaps

Samples = Union[Mapping[Fraction, Real], Callable[[Real], Real]]

DEFAULT_GRID = 1024
BOUND_TOL = 1e-9


def _finite(*values: Real) -> bool:
    return all(isinstance(v, Fraction) or math.isfinite(v) for v in values)


@dataclass(frozen=True)
class CubicSegment:
    a1: Real
    a2: Real
    b1: Real
    b2: Real
    s1: Real
    s2: Real

    def __post_init__(self) -> None:
        if not _finite(self.a1, self.a2, self.b1, self.b2, self.s1, self.s2):
            raise ValueError("hermite_cubic inputs must be finite")
        if not self.a1 < self.a2:
            raise ValueError(f"need a1 < a2, got a1={self.a1}, a2={self.a2}")

    @property
    def width(self) -> Real:
        return self.a2 - self.a1

    @property
    def s(self) -> Real:
        return (self.b2 - self.b1) / self.width

    @property
    def M(self) -> Real:
        s = self.s
        return max(abs(self.s1 - s), abs(self.s2 - s))

    @property
    def beta1(self) -> Real:
        return (self.s1 - self.s) / self.width**2

    @property
    def beta2(self) -> Real:
        return (self.s2 - self.s) / self.width**2

    def line(self, x):
        return self.b1 + self.s * (x - self.a1)

    def correction(self, x):
        """f(x) - L(x), in factored form."""
        u = x - self.a1
        v = x - self.a2
        return self.beta2 * u * u * v + self.beta1 * u * v * v

    def correction_slope(self, x):
        """f'(x) - s."""
        u = x - self.a1
        v = x - self.a2
        b1, b2 = self.beta1, self.beta2
        return b2 * u * u + b1 * v * v + 2 * (b1 + b2) * u * v

    def _exact(self) -> bool:
        return not all(isinstance(v, float) for v in (self.a1, self.a2, self.b1, self.b2, self.s1, self.s2))

    def value(self, x):
        if isinstance(x, np.ndarray) and self._exact():
            return self.as_float().value(x)
        return self.line(x) + self.correction(x)

    def slope(self, x):
        if isinstance(x, np.ndarray) and self._exact():
            return self.as_float().slope(x)
        return self.s + self.correction_slope(x)

    __call__ = value

    def as_float(self) -> "CubicSegment":
        return CubicSegment(*(float(v) for v in (self.a1, self.a2, self.b1, self.b2, self.s1, self.s2)))

    def to_json(self) -> dict:
        keys = ("a1", "a2", "b1", "b2", "s1", "s2", "beta1", "beta2")
        return {k: float(getattr(self, k)) for k in keys}


def hermite_cubic(a1: Real, a2: Real, b1: Real, b2: Real, s1: Real, s2: Real) -> CubicSegment:
    return CubicSegment(a1, a2, b1, b2, s1, s2)


@dataclass(frozen=True)
class BoundReport:
    max_slope_dev: float
    max_value_dev: float
    max_secant_dev: float

    def within(self, tol: float = BOUND_TOL) -> bool:
        return (
            self.max_slope_dev <= 3 + tol
            and self.max_value_dev <= 2 + tol
            and self.max_secant_dev <= 3 + tol
        )


def _grid_secant_extremes(x: np.ndarray, g: np.ndarray, seg: CubicSegment) -> float:
    """max |(g_j - g_i)/(x_j - x_i)| over all grid pairs i < j, where g = f - L.

    For a cubic, the secant is a quadratic in x_j for fixed x_i, so on the grid
    its extremes sit at j = i+1, j = n-1 or next to the vertex; only those
    candidates are evaluated.
    """
    n = x.size
    w = float(seg.width)
    t = (x - x[0]) / w
    # g(t) = w^3 (beta2 t^2 (t - 1) + beta1 t (t - 1)^2) = w^3 (c3 t^3 + c2 t^2 + c1 t)
    b1, b2 = float(seg.beta1), float(seg.beta2)
    c3 = b1 + b2
    c2 = -b2 - 2 * b1
    i = np.arange(n - 1)
    cands = [i + 1, np.full(n - 1, n - 1)]
    if c3 != 0.0:
        # d/dt_j of c3 (ti^2 + ti tj + tj^2) + c2 (ti + tj) vanishes at tj = -(c3 ti + c2) / (2 c3)
        tv = -(c3 * t[:-1] + c2) / (2 * c3)
        jv = np.floor(tv * (n - 1)).astype(np.int64)
        cands += [jv, jv + 1]
    best = 0.0
    for j in cands:
        j = np.clip(j, i + 1, n - 1)
        sec = (g[j] - g[i]) / (x[j] - x[i])
        best = max(best, float(np.max(np.abs(sec))))
    return best


def verify_hermite_bounds(seg: CubicSegment, grid_size: int = DEFAULT_GRID) -> BoundReport:
    """Normalised grid maxima of |f'-s|/M, |f-L|/(M w) and |secant-s|/M."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    M = float(seg.M)
    if M == 0.0:
        return BoundReport(0.0, 0.0, 0.0)
    fs = seg.as_float()
    x = np.linspace(fs.a1, fs.a2, grid_size)
    g = fs.correction(x)
    w = fs.a2 - fs.a1
    return BoundReport(
        max_slope_dev=float(np.max(np.abs(fs.correction_slope(x)))) / M,
        max_value_dev=float(np.max(np.abs(g))) / (M * w),
        max_secant_dev=_grid_secant_extremes(x, g, fs) / M,
    )


def _as_callable(samples: Samples) -> Callable[[Real], Real]:
    if callable(samples):
        return samples
    table = {as_fraction(k): v for k, v in samples.items()}

    def lookup(x):
        return table[as_fraction(x)]

    lookup.table = table  # type: ignore[attr-defined]
    return lookup


@dataclass
class PiecewiseC1:
    """C^1 extension of (f, h) from a closed set D to the whole line.

    Bounded gaps carry Hermite cubics; the two unbounded rays carry the
    tangent lines at the extreme points of D.
    """

    D: ClosedSet
    f: Callable[[Real], Real]
    h: Callable[[Real], Real]
    segments: tuple[CubicSegment, ...]

    def __post_init__(self) -> None:
        self._gap_lefts = [seg.a1 for seg in self.segments]
        self._lo, self._hi = self.D.hull
        self._f_lo, self._h_lo = self.f(self._lo), self.h(self._lo)
        self._f_hi, self._h_hi = self.f(self._hi), self.h(self._hi)

    def _locate(self, x):
        if x < self._lo:
            return "left", None
        if x > self._hi:
            return "right", None
        i = self.D.piece_index(x)
        if i is not None:
            return "piece", i
        j = bisect.bisect_right(self._gap_lefts, x) - 1
        return "gap", j

    def value(self, x: Real):
        kind, j = self._locate(x)
        if kind == "left":
            return self._f_lo + (x - self._lo) * self._h_lo
        if kind == "right":
            return self._f_hi + (x - self._hi) * self._h_hi
        if kind == "piece":
            return self.f(x)
        return self.segments[j].value(x)

    def slope(self, x: Real):
        kind, j = self._locate(x)
        if kind == "left":
            return self._h_lo
        if kind == "right":
            return self._h_hi
        if kind == "piece":
            return self.h(x)
        return self.segments[j].slope(x)

    __call__ = value

    def values(self, xs: Sequence[float]) -> np.ndarray:
        return np.array([float(self.value(float(x))) for x in xs])

    def slopes(self, xs: Sequence[float]) -> np.ndarray:
        return np.array([float(self.slope(float(x))) for x in xs])

    def table(self, xs: Sequence[float]) -> list[tuple[float, float, float]]:
        """Rows (x, f~(x), h~(x)) for CSV dumps."""
        return [(float(x), float(self.value(float(x))), float(self.slope(float(x)))) for x in xs]


def c1_extend(D: ClosedSet, f: Samples, h: Samples) -> PiecewiseC1:
    """Extend values f and slopes h given on D to a C^1 function on the line."""
    if D.is_empty:
        raise ValueError("c1_extend needs a nonempty D")
    fc, hc = _as_callable(f), _as_callable(h)
    if not callable(f) or not callable(h):
        if not D.is_discrete:
            raise ValueError("table samples only supported on a discrete D; pass callables")
        for name, c in (("f", fc), ("h", hc)):
            table = getattr(c, "table", None)
            if table is not None:
                missing = [p for p in D.endpoints() if p not in table]
                if missing:
                    raise ValueError(f"missing {name} samples at {[str(m) for m in missing[:5]]}")
    segs = tuple(
        hermite_cubic(a1, a2, fc(a1), fc(a2), hc(a1), hc(a2)) for a1, a2 in gaps(D).bounded
    )
    return PiecewiseC1(D, fc, hc, segs)


@dataclass(frozen=True)
class ModulusEntry:
    eps: float
    delta: float
    failure: tuple[Fraction, Fraction] | None


def strong_derivative_modulus(
    D: ClosedSet, f: Samples, h: Samples, eps_list: Sequence[float]
) -> dict[Fraction, list[ModulusEntry]]:
    """Empirical modulus delta(eps) for "f' = h in the strong sense" on a finite sample.

    For each sample point x the candidate radii are the distances to the other
    sample points.  delta(eps) is the largest candidate radius whose open ball
    around x contains no pair x1 != x2 with |quotient - h(x)| >= eps; the pair
    that breaks the next radius is reported as the failure pair.  A radius of
    inf means every pair passed.
    """
    pts = D.endpoints()
    if len(pts) < 2:
        raise ValueError("need at least two sample points")
    fc, hc = _as_callable(f), _as_callable(h)
    fv = {p: fc(p) for p in pts}
    out: dict[Fraction, list[ModulusEntry]] = {}
    for x in pts:
        hx = hc(x)
        order = sorted(pts, key=lambda p: (abs(p - x), p))
        # group points by distance; ball(delta) = points with |p - x| < delta
        dists = sorted({abs(p - x) for p in order})
        ball: list[Fraction] = [x]
        worst = 0.0
        worst_pair: tuple[Fraction, Fraction] | None = None
        # worst deviation after adding each distance shell
        shells: list[tuple[Fraction, float, tuple | None]] = []
        for d in dists[1:]:
            # radius d still excludes the shell at distance d
            shells.append((d, worst, worst_pair))
            for p in [q for q in order if abs(q - x) == d]:
                for q in ball:
                    quot = (fv[p] - fv[q]) / (p - q)
                    dev = abs(float(quot - hx))
                    if dev > worst:
                        worst, worst_pair = dev, (min(p, q), max(p, q))
                ball.append(p)
        shells.append((None, worst, worst_pair))
        entries = []
        for eps in eps_list:
            delta, failure = 0.0, None
            for k, (d, dev, _) in enumerate(shells):
                if dev < eps:
                    delta = math.inf if d is None else float(d)
                else:
                    failure = shells[k][2]
                    break
            entries.append(ModulusEntry(float(eps), delta, failure))
        out[x] = entries
    return out
