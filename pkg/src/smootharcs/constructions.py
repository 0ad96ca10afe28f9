"""Assembled constructions: the vanishing-derivative function, the convex C^2-avoiding
set with its second-quotient blow-up, the squiggle witness on the graph of f, and the
C^1 arc through a directed sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .coloring import DiagonalExtension, diagonal_extend
from .geometry import GraphFrame, PointSet, SquiggleVerdict, nonsquiggly_check, rotate_to_graph
from .hermite import PiecewiseC1, c1_extend
from .realsets import ClosedSet, Real, as_fraction, cantor_points, gaps
from .smoothtools import (
    DEFAULT_K_MAX,
    GapBumps,
    SmoothFn,
    bump_complement,
    integrate,
    smooth_step,
    step_inverse,
    step_normalizer,
)

CONVEX_AMBIENT = (Fraction(-1), Fraction(2))
DEFAULT_POWER = 7  # gap n is mapped onto an interval of length L_n^7
DEFAULT_T_LADDER = (1e-1, 1e-2, 1e-3, 1e-4)
QUAD_TOL = 1e-15


# --- f with f' vanishing exactly on D -----------------------------------------------


@dataclass(frozen=True)
class VanishingDerivative:
    """f = f(anchor) + integral of h_U: on a gap (a, a + L), f = F_a + Delta psi((x - a)/L)."""

    D: ClosedSet
    bumps: GapBumps
    gap_left: tuple[Fraction, ...]
    gap_len: tuple[Fraction, ...]
    increments: tuple[Real, ...]  # Delta_n = c_n L_n I
    offsets: tuple[Real, ...]  # f at the left end of each gap
    degenerate: bool  # D has an interval piece, so f is constant there
    fn: SmoothFn = field(repr=False)

    def __call__(self, x):
        return self.fn(x)

    def at_gap_ends(self) -> list[tuple[Fraction, Real]]:
        """(x, f(x)) at every gap endpoint, exact when the increments are."""
        out = []
        for a, L, F, d in zip(self.gap_left, self.gap_len, self.offsets, self.increments):
            out += [(a, F), (a + L, F + d)]
        return out

    def value_on_D(self, x: Fraction) -> Real:
        """Exact f at a point of D."""
        x = as_fraction(x)
        if not self.D.contains(x):
            raise ValueError(f"{x} is not in D")
        for a, F in zip(self.gap_left, self.offsets):
            if a >= x:
                return F
        if not self.offsets:
            return 0
        return self.offsets[-1] + self.increments[-1]


def build_vanishing_derivative_f(
    D: ClosedSet,
    ambient: Sequence[Real] = (0, 1),
    k_max: int = DEFAULT_K_MAX,
    increments: Sequence[Real] | None = None,
    anchor: Real | None = None,
) -> VanishingDerivative:
    """Strictly increasing C^k_max function whose derivative vanishes exactly on D.

    The weights of the gap bumps follow the default c_n rule unless explicit
    per-gap increments Delta_n (the rise of f across gap n) are given.  f is
    zero at ``anchor`` (default: the left end of the ambient interval).
    """
    gl = gaps(D, ambient).bounded
    lefts = tuple(a for a, _ in gl)
    lens = tuple(b - a for a, b in gl)
    I = step_normalizer()
    if increments is None:
        bumps = bump_complement(D, ambient, k_max)
        incs: tuple[Real, ...] = tuple(c * float(L) * I for c, L in zip(bumps.weights, lens))
    else:
        incs = tuple(increments)
        if len(incs) != len(gl):
            raise ValueError(f"expected {len(gl)} increments, got {len(incs)}")
        bumps = bump_complement(D, ambient, k_max, weights=[float(d) / (float(L) * I) for d, L in zip(incs, lens)])
    zero = Fraction(0) if all(isinstance(d, Fraction) for d in incs) else 0.0
    cum = [zero]
    for d in incs:
        cum.append(cum[-1] + d)
    anchor_x = as_fraction(ambient[0] if anchor is None else anchor)
    shift = sum((d for a, d in zip(lefts, incs) if a < anchor_x), zero)
    offsets = tuple(c - shift for c in cum[:-1])
    psi = smooth_step(k_max + 1)
    a_f = np.array([float(a) for a in lefts])
    L_f = np.array([float(L) for L in lens])
    F_f = np.array([float(v) for v in offsets])
    d_f = np.array([float(d) for d in incs])
    lo_val = float(offsets[0]) if offsets else 0.0
    hi_val = float(offsets[-1] + incs[-1]) if offsets else 0.0

    def evaluate(x: np.ndarray, k: int) -> np.ndarray:
        if k > 0:
            return bumps.evaluate(x, k - 1)
        if not len(a_f):
            return np.zeros_like(x)
        j = np.clip(np.searchsorted(a_f, x, side="right") - 1, 0, len(a_f) - 1)
        s = np.clip((x - a_f[j]) / L_f[j], 0.0, 1.0)
        out = F_f[j] + d_f[j] * psi(s)
        out = np.where(x < a_f[0], lo_val, out)
        return np.where(x > a_f[-1] + L_f[-1], hi_val, out)

    degenerate = not D.is_discrete or not gl
    fn = SmoothFn(evaluate, k_max + 1, (float(ambient[0]), float(ambient[1])), name="f")
    return VanishingDerivative(D, bumps, lefts, lens, incs, offsets, degenerate, fn)


# --- convex C^2-avoiding set ---------------------------------------------------------


@dataclass(frozen=True)
class C2AvoidConstruction:
    """psi' = phi = f^-1 with f from a discrete Cantor-type D.

    Gap n of D (left end a, length L, rise Delta) is carried by f onto the image
    interval [F, F + Delta]; there phi(y) = a + L step^-1((y - F)/Delta).  Image
    intervals abut, and over a whole image interval the integral of phi is
    Delta (a + L/2), so psi is exact and rational on K = f(D).
    """

    f: VanishingDerivative
    power: int
    K: tuple[Fraction, ...]
    D_points: tuple[Fraction, ...]
    psi_K: tuple[Fraction, ...]
    P: PointSet
    psi_table: np.ndarray  # rows (y, psi(y), phi(y))

    @property
    def image_lo(self) -> Fraction:
        return self.f.offsets[0]

    @property
    def image_hi(self) -> Fraction:
        return self.f.offsets[-1] + self.f.increments[-1]

    def _gap_of(self, y: np.ndarray) -> np.ndarray:
        F = np.array([float(v) for v in self.f.offsets])
        return np.clip(np.searchsorted(F, y, side="right") - 1, 0, len(F) - 1)

    def phi(self, y: Sequence[float] | float) -> np.ndarray | float:
        arr = np.asarray(y, dtype=float)
        yy = np.atleast_1d(arr)
        lo, hi = float(self.image_lo), float(self.image_hi)
        if np.any((yy < lo) | (yy > hi)):
            raise ValueError(f"phi is defined on [{lo}, {hi}]")
        j = self._gap_of(yy)
        a = np.array([float(v) for v in self.f.gap_left])[j]
        L = np.array([float(v) for v in self.f.gap_len])[j]
        F = np.array([float(v) for v in self.f.offsets])[j]
        d = np.array([float(v) for v in self.f.increments])[j]
        r = np.clip((yy - F) / d, 0.0, 1.0)
        out = a + L * step_inverse(r)
        return float(out[0]) if arr.ndim == 0 else out

    def psi_at(self, y: float) -> float:
        """psi(y) from the exact value at the start of its image interval plus a partial integral."""
        j = int(self._gap_of(np.array([y]))[0])
        base = self._psi_start(j)
        return float(base) + self.integral_phi_minus(float(self.f.offsets[j]), y - float(self.f.offsets[j]), shift=0.0)

    def psi_values(self, ys: Sequence[float]) -> np.ndarray:
        """Vectorised psi: on image interval j with s = step^-1((y - F)/Delta),
        psi(y) = psi(F) + Delta (a step(s) + L (s step(s) - int_0^s step))."""
        yy = np.asarray(ys, dtype=float)
        j = self._gap_of(yy)
        F = np.array([float(v) for v in self.f.offsets])[j]
        a = np.array([float(v) for v in self.f.gap_left])[j]
        L = np.array([float(v) for v in self.f.gap_len])[j]
        d = np.array([float(v) for v in self.f.increments])[j]
        r = np.clip((yy - F) / d, 0.0, 1.0)
        s = step_inverse(r)
        step = smooth_step(1)
        area = np.array([integrate(step, 0.0, float(si), tol=QUAD_TOL) for si in s])
        base = np.array([float(self._psi_start(int(k))) for k in j])
        return base + d * (a * r + L * (s * r - area))

    def _psi_start(self, j: int) -> Fraction:
        i0 = self.f.gap_left.index(self.D_points[0])  # first gap to the right of min D
        total = Fraction(0)
        lo, hi = (i0, j) if j >= i0 else (j, i0)
        for n in range(lo, hi):
            a, L, d = self.f.gap_left[n], self.f.gap_len[n], self.f.increments[n]
            total += d * (a + L / 2)
        return total if j >= i0 else -total

    def integral_phi_minus(self, x: float, t: float, shift: float | None = None) -> float:
        """Integral of phi(y) - c over [x, x + t] (signed), with c = phi(x) unless ``shift`` is given."""
        return self._integral(x, t, shift)[0]

    def _integral(self, x: float, t: float, shift: float | None = None) -> tuple[float, float]:
        """(integral, error estimate): quadrature tolerance plus rounding of each term."""
        if t == 0:
            return 0.0, 0.0
        c = self.phi(x) if shift is None else shift
        lo, hi = (x, x + t) if t > 0 else (x + t, x)
        F = [float(v) for v in self.f.offsets]
        total, noise = 0.0, 0.0
        eps = np.finfo(float).eps
        psi1 = lambda s: s * smooth_step(1).derivative(s, 1)
        j = int(self._gap_of(np.array([lo]))[0])
        while j < len(F) and F[j] < hi:
            a, L, d = (float(v[j]) for v in (self.f.gap_left, self.f.gap_len, self.f.increments))
            y1, y2 = max(lo, F[j]), min(hi, F[j] + d)
            if y2 > y1:
                if y1 == F[j] and y2 == F[j] + d:
                    term = d * (a - c + L / 2)
                else:
                    s1, s2 = step_inverse(np.array([(y1 - F[j]) / d, (y2 - F[j]) / d]))
                    # int (a + L s - c) d psi'(s) ds over [s1, s2]
                    term = (a - c) * (y2 - y1) + d * L * integrate(psi1, s1, s2, tol=QUAD_TOL)
                    noise += d * L * QUAD_TOL
                total += term
                noise += 8 * eps * (abs(a) + abs(c) + L) * (y2 - y1 + np.spacing(max(abs(y1), abs(y2))) * 4)
            j += 1
        return (total if t > 0 else -total), noise

    def star_quotient(self, x: float, t: float) -> float:
        return self.integral_phi_minus(x, t) / (t * t)

    def local_M(self, lo: float, hi: float) -> float:
        """min phi' over image intervals meeting [lo, hi]: L_n / (Delta_n max psi')."""
        S1 = smooth_step(1).sup[1]
        F = [float(v) for v in self.f.offsets]
        best = math.inf
        for j, (L, d) in enumerate(zip(self.f.gap_len, self.f.increments)):
            if F[j] <= hi and F[j] + float(d) >= lo:
                best = min(best, float(L) / (float(d) * S1))
        return best


def _discrete_cantor(D: ClosedSet | int) -> ClosedSet:
    if isinstance(D, int):
        return cantor_points(D)
    if not D.is_discrete or len(D) < 2:
        raise ValueError("need a discrete Cantor-type set with at least two points")
    return D


def c2_avoider(D: ClosedSet | int = 5, samples: int = 2000, power: int = DEFAULT_POWER) -> C2AvoidConstruction:
    """Build f, phi = f^-1, psi with psi' = phi, K = f(D) and P = graph of psi on K.

    ``D`` is a discrete Cantor-type set inside (-1, 2), or a level for the set of
    left endpoints of the middle-thirds construction on [0, 1].
    """
    D = _discrete_cantor(D)
    lo, hi = D.hull
    if not (CONVEX_AMBIENT[0] < lo and hi < CONVEX_AMBIENT[1]):
        raise ValueError("D must lie strictly inside (-1, 2)")
    gl = gaps(D, CONVEX_AMBIENT).bounded
    incs = [(b - a) ** power for a, b in gl]
    f = build_vanishing_derivative_f(D, CONVEX_AMBIENT, increments=incs, anchor=lo)
    pts = tuple(p for p, _ in D.pieces)
    K = tuple(f.offsets[f.gap_left.index(p)] for p in pts)
    # psi on K: sum of Delta (a + L/2) over the image intervals between consecutive K points
    psiK = [Fraction(0)]
    for p in pts[:-1]:
        n = f.gap_left.index(p)
        psiK.append(psiK[-1] + f.increments[n] * (p + f.gap_len[n] / 2))
    P = PointSet(tuple(zip(K, psiK)), exact=True)
    c = C2AvoidConstruction(f, power, K, pts, tuple(psiK), P, np.empty((0, 3)))
    ys = np.linspace(float(K[0]), float(K[-1]), max(samples, 2))
    table = np.column_stack([ys, c.psi_values(ys), c.phi(ys)])
    object.__setattr__(c, "psi_table", table)
    return c


@dataclass(frozen=True)
class ComparisonFunction:
    """A smooth psi with known derivative, for the control run of the quotient test."""

    psi: Callable[[float], float]
    dpsi: Callable[[float], float]

    def star_quotient(self, x: float, t: float) -> float:
        return ((self.psi(x + t) - self.psi(x)) / t - self.dpsi(x)) / t


def square_comparison() -> ComparisonFunction:
    return ComparisonFunction(lambda x: x * x, lambda x: 2 * x)


@dataclass(frozen=True)
class StarTable:
    x: float
    t: tuple[float, ...]
    Q: tuple[float, ...]
    increasing_tail: bool  # Q increasing in 1/|t| over the last three rungs

    def to_json(self) -> dict:
        return {"x": self.x, "t": list(self.t), "Q": list(self.Q), "increasing_tail": self.increasing_tail}


def star_divergence_test(
    c: C2AvoidConstruction | ComparisonFunction, x: Real, t_list: Sequence[float] = DEFAULT_T_LADDER
) -> StarTable:
    """Q(x, t) = ((psi(x + t) - psi(x))/t - phi(x))/t along a ladder of t."""
    ts = [float(t) for t in t_list]
    if any(t == 0 for t in ts):
        raise ValueError("t must be nonzero")
    if any(abs(b) >= abs(a) for a, b in zip(ts, ts[1:])):
        raise ValueError("t_list must decrease in magnitude")
    xf = float(x)
    if isinstance(c, C2AvoidConstruction):
        Q = []
        for t in ts:
            val, noise = c._integral(xf, t)
            if noise > 1e-6 * abs(val):
                raise ValueError(f"t={t} is too small to resolve Q at x={xf}; use a larger t")
            Q.append(val / (t * t))
        Q = tuple(Q)
    else:
        Q = tuple(c.star_quotient(xf, t) for t in ts)
    tail = Q[-3:]
    inc = all(b > a for a, b in zip(tail, tail[1:]))
    return StarTable(xf, tuple(ts), Q, inc)


@dataclass(frozen=True)
class TaylorScan:
    triples: int
    min_dd: float
    max_dd: float
    min_dd_times_spacing: float  # the constant c in DD >= c / spacing
    all_above_threshold: bool
    grows: bool  # DD over the finest spacings exceeds DD over the coarsest
    rows: tuple[tuple[float, float], ...]  # (spacing x2 - x0, second divided difference)

    def to_json(self) -> dict:
        return {
            "triples": self.triples,
            "min_dd": self.min_dd,
            "max_dd": self.max_dd,
            "min_dd_times_spacing": self.min_dd_times_spacing,
            "all_above_threshold": self.all_above_threshold,
            "grows": self.grows,
        }


def second_divided_differences(points: Sequence[Sequence[Real]]) -> list[tuple[Fraction, Fraction]]:
    """(x2 - x0, [x0, x1, x2]) for consecutive triples of points sorted by x, exactly."""
    pts = sorted((as_fraction(p[0]), as_fraction(p[1])) for p in points)
    out = []
    for (x0, y0), (x1, y1), (x2, y2) in zip(pts, pts[1:], pts[2:]):
        dd = ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0)
        out.append((x2 - x0, dd))
    return out


def taylor_contradiction_scan(
    c: C2AvoidConstruction | Sequence[Sequence[Real]], window: tuple[Real, Real] | None = None
) -> TaylorScan:
    """Second divided differences of consecutive sample triples against their spacing.

    Points on the graph of a C^2 function have bounded divided differences; for
    the convex construction DD * spacing stays bounded below, so DD grows like
    1 / spacing.
    """
    pts = list(zip(c.K, c.psi_K)) if isinstance(c, C2AvoidConstruction) else [tuple(p) for p in points_of(c)]
    if window is not None:
        lo, hi = (as_fraction(w) for w in window)
        pts = [p for p in pts if lo <= as_fraction(p[0]) <= hi]
    if len(pts) < 3:
        raise ValueError("need at least three samples in the window")
    rows = second_divided_differences(pts)
    prod = [h * dd for h, dd in rows]
    cmin = min(prod)
    above = cmin > 0 and all(dd >= cmin / h for h, dd in rows)
    by_spacing = sorted(rows)
    k = max(1, len(rows) // 10)
    fine = sum(float(dd) for _, dd in by_spacing[:k]) / k
    coarse = sum(float(dd) for _, dd in by_spacing[-k:]) / k
    return TaylorScan(
        triples=len(rows),
        min_dd=float(min(dd for _, dd in rows)),
        max_dd=float(max(dd for _, dd in rows)),
        min_dd_times_spacing=float(cmin),
        all_above_threshold=above,
        grows=fine > coarse,
        rows=tuple((float(h), float(dd)) for h, dd in rows),
    )


def points_of(c: Sequence[Sequence[Real]]) -> list[tuple[Real, Real]]:
    return [(p[0], p[1]) for p in c]


# --- squiggle witness on the graph of f -----------------------------------------------


@dataclass(frozen=True)
class SquiggleDemo:
    level: int
    points: PointSet
    verdict: SquiggleVerdict
    note: str | None

    def to_json(self) -> dict:
        return {"level": self.level, "verdict": self.verdict.to_json(), "note": self.note}


def squiggle_witness_demo(level: int = 5, D: ClosedSet | None = None) -> SquiggleDemo:
    """Graph of f on D (f' = 0 exactly on D) checked for a point inside a triangle of three others."""
    if level < 0:
        raise ValueError("level must be >= 0")
    D = _discrete_cantor(D if D is not None else level)
    f = build_vanishing_derivative_f(D, CONVEX_AMBIENT)
    pts = [(p, f.value_on_D(p)) for p, _ in D.pieces]
    P = PointSet.of(pts)
    verdict = nonsquiggly_check(P)
    note = None if not verdict.nonsquiggly else f"no witness among {len(P)} points; try a deeper level"
    return SquiggleDemo(level, P, verdict, note)


# --- C^1 arc through a directed sample ------------------------------------------------


@dataclass(frozen=True)
class ConeShrink:
    """y' = lam (y - m x): slopes s map to lam (s - m).  Exact and invertible."""

    m: Fraction
    lam: Fraction

    def apply(self, pts: Sequence[Sequence[Real]]) -> list[tuple[Fraction, Fraction]]:
        return [(as_fraction(x), self.lam * (as_fraction(y) - self.m * as_fraction(x))) for x, y in pts]

    def invert(self, pts: Sequence[Sequence[Real]]) -> list[tuple[Fraction, Fraction]]:
        return [(as_fraction(x), as_fraction(y) / self.lam + self.m * as_fraction(x)) for x, y in pts]


def shrink_into_cone(pts: Sequence[Sequence[Real]], half_angle_deg: float = 15.0) -> tuple[list[tuple[Fraction, Fraction]], ConeShrink]:
    """Shear and scale planar graph data so every chord slope lies within +-tan(half_angle)."""
    P = sorted((as_fraction(x), as_fraction(y)) for x, y in pts)
    slopes = [(y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(P, P[1:])]
    smin, smax = min(slopes), max(slopes)
    m = (smin + smax) / 2
    half = (smax - smin) / 2
    target = Fraction(math.tan(math.radians(half_angle_deg))).limit_denominator(10**6)
    lam = target / half if half > 0 else Fraction(1)
    sh = ConeShrink(m, lam)
    return sh.apply(P), sh


@dataclass
class C1Arc:
    frame: GraphFrame
    coords: list[PiecewiseC1]
    extensions: list[DiagonalExtension]
    xs: list[Fraction]
    slopes: np.ndarray  # h^i at each sample abscissa, shape (n, dim - 1)
    max_interp_error: float
    mesh: float
    depth: int

    def __call__(self, x: float) -> np.ndarray:
        """Point of the arc over abscissa x, in the original coordinates."""
        y = [float(A.value(x)) for A in self.coords]
        return self.frame.to_original(np.array([x, *y]))

    def continuity_errors(self, taus: Sequence[float]) -> list[float]:
        """max over sample abscissae of |central difference - h~| for each step."""
        out = []
        for tau in taus:
            worst = 0.0
            for A in self.coords:
                for x in self.xs:
                    xf = float(x)
                    cd = (float(A.value(xf + tau)) - float(A.value(xf - tau))) / (2 * tau)
                    worst = max(worst, abs(cd - float(A.slope(xf))))
            out.append(worst)
        return out

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "identity_frame": self.frame.identity,
            "max_interp_error": self.max_interp_error,
            "mesh": self.mesh,
            "samples": [[float(x), *map(float, h)] for x, h in zip(self.xs, self.slopes)],
        }


def c1_arc_through(P: PointSet | Sequence[Sequence[Real]], depth: int = 6) -> C1Arc:
    """C^1 arc through every point of a 2 sin(22.5 deg)-directed sample.

    Rotate into a graph, take the chord-slope oracle per coordinate, extend it
    to the diagonal to get slopes h^i at the samples, then Hermite-extend each
    coordinate.
    """
    P = PointSet.of(P)
    frame = rotate_to_graph(P, prefer_axis=True)
    if frame.identity and P.exact:
        rows = [P.points[m] for m in frame.order]
    else:
        rows = [tuple(as_fraction(float(v)) for v in r) for r in frame.points]
    xs = [r[0] for r in rows]
    xf = np.array([float(x) for x in xs])
    if np.any(np.diff(xf) <= 0):
        raise ValueError("abscissae collide in double precision")
    n, dim = len(rows), P.dim
    D = ClosedSet.from_points(xs)
    coords, exts = [], []
    slopes = np.zeros((n, dim - 1))
    gaps_ = np.diff(xf)
    mesh = float(np.max(np.minimum(np.r_[gaps_, np.inf], np.r_[np.inf, gaps_]))) if n > 1 else 0.0
    for i in range(1, dim):
        ys = [r[i] for r in rows]
        chord = np.zeros((n, n))
        for a in range(n):
            for b in range(a + 1, n):
                chord[a, b] = chord[b, a] = float((ys[b] - ys[a]) / (xs[b] - xs[a]))

        def g(x1: np.ndarray, x2: np.ndarray, chord=chord) -> np.ndarray:
            return chord[np.searchsorted(xf, x1), np.searchsorted(xf, x2)]

        ext = diagonal_extend(g, xf, depth)
        h = {x: float(ext.value(float(x))[0]) for x in xs}
        slopes[:, i - 1] = [h[x] for x in xs]
        fvals = dict(zip(xs, ys))
        coords.append(c1_extend(D, fvals, h))
        exts.append(ext)
    # the arc must pass through every sample
    err = 0.0
    for r in rows:
        for i, A in enumerate(coords, start=1):
            err = max(err, abs(float(A.value(r[0]) - r[i])))
    X = P.array()
    for m, r in zip(frame.order, rows):
        back = frame.to_original(np.array([float(v) for v in r]))
        err = max(err, float(np.max(np.abs(back - X[m]))))
    return C1Arc(frame, coords, exts, xs, slopes, err, mesh, depth)
