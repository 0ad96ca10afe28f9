"""Flat data on a closed subset of [0, 1] and its smooth-step interpolation.

For data g on D (with 0, 1 in D) the interpolant on a gap (a, b) is

    g~(u) = g(a) + (g(b) - g(a)) psi((u - a) / (b - a)),

and g~^(k) vanishes on D when g is flat, i.e. ||g(u) - g(t)|| <= M_a |u - t|^a
for every order a.  The constants M_a are computed exactly from squared
norms when the data are rational.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .geometry import orient2d
from .realsets import Real, as_fraction, cantor_points
from .smoothtools import SmoothFn, smooth_step

DEFAULT_ALPHA_MAX = 6
DEFAULT_TRUNCATION = 6
STEP_ORDER = 10  # psi derivatives needed for S_{2k+4} with k <= 3

Vec = tuple[Fraction, ...]


def _sqnorm(v: Sequence[Fraction]) -> Fraction:
    return sum((c * c for c in v), Fraction(0))


def _isqrt_frac(q: Fraction) -> float:
    return math.sqrt(q.numerator) / math.sqrt(q.denominator) if q else 0.0


@dataclass(frozen=True)
class FlatnessReport:
    M: tuple[float, ...]  # M_alpha for alpha = 0..alpha_max
    M_sq: tuple[Fraction, ...]  # exact squares
    argmax: tuple[tuple[Fraction, Fraction], ...]  # pair attaining each M_alpha
    blowup: tuple[int, ...]  # alphas where M_{a+1} / M_a exceeds the caller threshold

    def within(self, bound: Sequence[Real]) -> bool:
        """Exact check M_alpha <= bound[alpha] for every alpha covered by ``bound``."""
        return all(m2 <= as_fraction(b) ** 2 for m2, b in zip(self.M_sq, bound))


def flatness_constants(
    D: Sequence[Real],
    g: Mapping[Fraction, Sequence[Real]] | Sequence[Sequence[Real]],
    alpha_max: int = DEFAULT_ALPHA_MAX,
    growth_threshold: float | None = None,
) -> FlatnessReport:
    """M_alpha = max over sample pairs of ||g(u) - g(t)|| / |u - t|^alpha."""
    pts = [as_fraction(t) for t in D]
    if len(pts) < 2 or len(set(pts)) != len(pts):
        raise ValueError("need at least two distinct sample points")
    vals = [g[p] for p in pts] if isinstance(g, Mapping) else list(g)
    vec = [tuple(as_fraction(c) for c in np.atleast_1d(v)) for v in vals]
    M_sq, arg = [], []
    pairs = [
        (_sqnorm([a - b for a, b in zip(vec[i], vec[j])]), (pts[i] - pts[j]) ** 2, (pts[i], pts[j]))
        for i, j in itertools.combinations(range(len(pts)), 2)
    ]
    for alpha in range(alpha_max + 1):
        best, where = Fraction(0), pairs[0][2]
        for num, d2, pair in pairs:
            q = num / d2**alpha
            if q > best:
                best, where = q, pair
        M_sq.append(best)
        arg.append(where)
    M = tuple(_isqrt_frac(m) for m in M_sq)
    blow = ()
    if growth_threshold is not None:
        blow = tuple(a for a in range(alpha_max) if M[a] > 0 and M[a + 1] / M[a] > growth_threshold)
    return FlatnessReport(M, tuple(M_sq), tuple(arg), blow)


@dataclass(frozen=True)
class FlatPathData:
    points: tuple[Fraction, ...]  # sorted, contains 0 and 1
    values: tuple[Vec, ...]
    alpha_max: int
    flatness: FlatnessReport

    def __post_init__(self) -> None:
        if list(self.points) != sorted(set(self.points)):
            raise ValueError("sample points must be strictly increasing")
        if self.points[0] != 0 or self.points[-1] != 1:
            raise ValueError("0 and 1 must belong to D")
        if len(self.values) != len(self.points):
            raise ValueError("one value per sample point")

    @classmethod
    def build(cls, points: Sequence[Real], values: Sequence[Sequence[Real]], alpha_max: int = DEFAULT_ALPHA_MAX) -> "FlatPathData":
        order = sorted(range(len(points)), key=lambda i: as_fraction(points[i]))
        pts = tuple(as_fraction(points[i]) for i in order)
        vals = tuple(tuple(as_fraction(c) for c in values[i]) for i in order)
        return cls(pts, vals, alpha_max, flatness_constants(pts, vals, alpha_max))

    @property
    def M(self) -> tuple[float, ...]:
        return self.flatness.M

    @property
    def dim(self) -> int:
        return len(self.values[0])

    def to_json(self) -> dict:
        return {
            "D": [str(p) for p in self.points],
            "g": [[float(c) for c in v] for v in self.values],
            "M": list(self.M),
        }


@dataclass
class InterpolatedPath:
    data: FlatPathData
    psi: SmoothFn

    def __post_init__(self) -> None:
        if abs(self.psi(0.0)) > 1e-15 or abs(self.psi(1.0) - 1.0) > 1e-15:
            raise ValueError("psi must satisfy psi(0) = 0 and psi(1) = 1")
        self._t = np.array([float(p) for p in self.data.points])
        self._g = np.array([[float(c) for c in v] for v in self.data.values])

    @property
    def k_max(self) -> int:
        return self.psi.k_max

    def locate(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gap index per u and a mask of u lying on a sample point."""
        j = np.clip(np.searchsorted(self._t, u, side="right") - 1, 0, len(self._t) - 2)
        on_d = np.isin(u, self._t)
        return j, on_d

    def derivative(self, u: Sequence[float] | float, k: int = 0) -> np.ndarray:
        """g~^(k)(u) as rows; zero on D for k >= 1."""
        arr = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any((arr < 0) | (arr > 1)):
            raise ValueError("parameter outside [0, 1]")
        j, on_d = self.locate(arr)
        a, b = self._t[j], self._t[j + 1]
        L = b - a
        dg = self._g[j + 1] - self._g[j]
        s = (arr - a) / L
        out = dg * (self.psi.derivative(s, k) / L**k)[:, None]
        if k == 0:
            out += self._g[j]
            hit = np.searchsorted(self._t, arr[on_d])
            out[on_d] = self._g[hit]
        else:
            out[on_d] = 0.0
        return out

    def __call__(self, u: Sequence[float] | float) -> np.ndarray:
        return self.derivative(u, 0)

    def table(self, count: int = 1001) -> np.ndarray:
        u = np.linspace(0.0, 1.0, count)
        return np.column_stack([u, self(u)])


def psi_interpolate(data: FlatPathData, psi: SmoothFn | None = None) -> InterpolatedPath:
    return InterpolatedPath(data, psi if psi is not None else smooth_step(STEP_ORDER))


@dataclass(frozen=True)
class FlatBoundReport:
    B: tuple[float, ...]
    S: tuple[float, ...]
    worst_ratio: tuple[float, ...]  # max over samples of Q_k / (B_k |u - t|^2), per k
    samples: int
    passed: bool
    expected_failure_seen: bool  # bound (1) broken by two points inside one gap

    def to_json(self) -> dict:
        return {
            "B": list(self.B),
            "S": list(self.S),
            "worst_ratio": list(self.worst_ratio),
            "samples": self.samples,
            "passed": self.passed,
            "expected_failure_seen": self.expected_failure_seen,
        }


def case_constants(M: Sequence[float], S: Sequence[float], k_max: int) -> tuple[float, ...]:
    """B_k from the two single-gap subcases; B_0 also absorbs M_2 for t, u on opposite sides of a D point."""
    B = []
    for k in range(k_max + 1):
        b = max(M[k + 4] * S[k], M[0] * S[2 * k + 4] / math.factorial(k + 4))
        if k == 0:
            b += M[2]
        B.append(b)
    return tuple(B)


def _sample_u(path: InterpolatedPath, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    half = count // 2
    smallest = float(path.data.points[1])
    uni = rng.uniform(0.0, 1.0, count - half)
    logu = 2.0 ** rng.uniform(math.log2(smallest) - 1, 0.0, half)
    u = np.concatenate([uni, logu])
    u = u[~np.isin(u, path._t)]
    return np.sort(u)


def verify_flat_bounds(path: InterpolatedPath, k_max: int = 3, samples: int = 1000, seed: int = 0) -> FlatBoundReport:
    """Check ||g~(u) - g~(t)|| <= B_0 |u-t|^2 and ||g~^(k)(u)|| <= B_k |u-t|^2 for u off D, t in D."""
    if 2 * k_max + 4 > path.k_max:
        raise ValueError(f"k_max={k_max} needs psi derivatives to order {2 * k_max + 4}")
    alpha_needed = k_max + 4
    data = path.data
    if data.alpha_max < alpha_needed:
        data = FlatPathData(data.points, data.values, alpha_needed, flatness_constants(data.points, data.values, alpha_needed))
    S = path.psi.sup
    B = case_constants(data.M, S, k_max)
    u = _sample_u(path, samples, seed)
    t = path._t
    d2 = (u[:, None] - t[None, :]) ** 2
    ratios = []
    for k in range(k_max + 1):
        gk = path.derivative(u, k)
        if k == 0:
            q = np.linalg.norm(gk[:, None, :] - path._g[None, :, :], axis=2)
        else:
            q = np.repeat(np.linalg.norm(gk, axis=1)[:, None], len(t), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(q > 0, q / (B[k] * d2), 0.0)
        ratios.append(float(np.max(r)))
    # (1) must fail for two nearby points inside a gap where g moves
    seen = False
    steep = np.linalg.norm(np.diff(path._g, axis=0), axis=1) / np.diff(t)
    j = int(np.argmax(steep))
    if steep[j] > 0:
        a, L = t[j], t[j + 1] - t[j]
        u1 = a + 0.5 * L
        # below h* = ||dg|| psi'(1/2) / (L B_0) the quadratic bound cannot hold
        h = min(1e-6 * L, 1e-2 * steep[j] * float(path.psi.derivative(0.5, 1)) / B[0])
        q = float(np.linalg.norm(path(u1 + h)[0] - path(u1)[0]))
        seen = q > B[0] * h * h
    ok = all(r <= 1 + 1e-9 for r in ratios)
    return FlatBoundReport(B, tuple(S[: 2 * k_max + 5]), tuple(ratios), len(u), ok, seen)


# --- data builders ----------------------------------------------------------------


def flat_bound(alpha: int) -> int:
    """2^(1 + alpha + alpha^2), valid for the 2^(-j^2) sequence."""
    return 2 ** (1 + alpha + alpha * alpha)


def _segments_meet_only_at_joints(P: Sequence[Vec]) -> tuple[bool, tuple[int, int] | None]:
    """Planar polyline P[0] - P[1] - ... : do non-adjacent segments stay disjoint and
    adjacent ones meet only at their shared vertex?  Exact predicates."""

    def on_segment(p, q, r) -> bool:
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])

    def intersect(p1, p2, p3, p4) -> bool:
        d1, d2 = orient2d(p3, p4, p1), orient2d(p3, p4, p2)
        d3, d4 = orient2d(p1, p2, p3), orient2d(p1, p2, p4)
        if d1 * d2 < 0 and d3 * d4 < 0:
            return True
        return (
            (d1 == 0 and on_segment(p3, p4, p1))
            or (d2 == 0 and on_segment(p3, p4, p2))
            or (d3 == 0 and on_segment(p1, p2, p3))
            or (d4 == 0 and on_segment(p1, p2, p4))
        )

    segs = list(zip(P, P[1:]))
    for i, j in itertools.combinations(range(len(segs)), 2):
        (p1, p2), (p3, p4) = segs[i], segs[j]
        if j == i + 1:
            # share p2 == p3; any other common point means overlap or fold-back
            if orient2d(p1, p2, p4) == 0 and (on_segment(p1, p2, p4) or on_segment(p3, p4, p1)):
                return False, (i, j)
        elif intersect(p1, p2, p3, p4):
            return False, (i, j)
    return True, None


@dataclass(frozen=True)
class PolygonalArc:
    data: FlatPathData
    within_bound: bool
    simple: bool  # segments meet only at the x_j; meaningful when checked_simple
    checked_simple: bool


def polygonal_arc_data(points: Sequence[Sequence[Real]], alpha_max: int = DEFAULT_ALPHA_MAX) -> PolygonalArc:
    """Data g(0) = 0, g(2^-j) = x_j for a sequence with strictly decreasing norms <= 2^(-j^2)."""
    xs = [tuple(as_fraction(c) for c in p) for p in points]
    if not xs:
        raise ValueError("need at least one point")
    norms = [_sqnorm(x) for x in xs]
    for j in range(1, len(xs)):
        if not norms[j] < norms[j - 1]:
            raise ValueError(f"norms must strictly decrease: condition fails at j={j}")
    for j, n2 in enumerate(norms):
        if n2 > Fraction(1, 2 ** (2 * j * j)):
            raise ValueError(f"||x_{j}|| exceeds 2^-{j * j} at j={j}")
    dim = len(xs[0])
    D = [Fraction(0)] + [Fraction(1, 2**j) for j in range(len(xs))]
    vals = [tuple(Fraction(0) for _ in range(dim))] + xs
    data = FlatPathData.build(D, vals, alpha_max)
    bound_ok = data.flatness.within([flat_bound(a) for a in range(alpha_max + 1)])
    simple, checked = False, dim == 2
    if checked:
        # the path runs 0 -> x_{J-1} -> ... -> x_0
        simple, _ = _segments_meet_only_at_joints([vals[0]] + xs[::-1])
    return PolygonalArc(data, bound_ok, simple, checked)


def reference_sequence(J: int = DEFAULT_TRUNCATION) -> list[tuple[Fraction, Fraction]]:
    """x_j = (2^(-j^2), 0) for j < J."""
    return [(Fraction(1, 2 ** (j * j)), Fraction(0)) for j in range(J)]


Box = tuple[Vec, Vec]  # (low corner, high corner)


def diagonal_shrink_targets(level: int, dim: int = 2) -> dict[tuple[int, ...], Box]:
    """Nested cubes F_sigma of side 3^(-j^2)/2 at the low and high corners of their parent."""
    root_side = Fraction(1, 2)
    F: dict[tuple[int, ...], Box] = {(): (tuple(Fraction(0) for _ in range(dim)), tuple(root_side for _ in range(dim)))}
    for j in range(1, level + 1):
        side = Fraction(1, 2 * 3 ** (j * j))
        for sigma in itertools.product((0, 2), repeat=j - 1):
            lo, hi = F[sigma]
            F[sigma + (0,)] = (lo, tuple(c + side for c in lo))
            F[sigma + (2,)] = (tuple(c - side for c in hi), hi)
    return F


def _box_diam_sq(box: Box) -> Fraction:
    return _sqnorm([h - l for l, h in zip(*box)])


@dataclass(frozen=True)
class CantorArc:
    data: FlatPathData
    first_coordinate_increasing: bool


def cantor_arc_data(level: int, targets: Mapping[tuple[int, ...], Box] | None = None, alpha_max: int = DEFAULT_ALPHA_MAX) -> CantorArc:
    """g(t_sigma) = centre of F_sigma on the level-k Cantor representatives, and g(1) = top corner of F_{22..2}."""
    if level < 0:
        raise ValueError("level must be >= 0")
    F = dict(targets) if targets is not None else diagonal_shrink_targets(level)
    for j in range(level + 1):
        sigmas = list(itertools.product((0, 2), repeat=j))
        for sigma in sigmas:
            if sigma not in F:
                raise ValueError(f"missing target box for {sigma}")
            box = tuple(tuple(as_fraction(c) for c in corner) for corner in F[sigma])
            F[sigma] = box
            if _box_diam_sq(box) > Fraction(1, 3 ** (2 * j * j)):
                raise ValueError(f"diam(F_{sigma}) exceeds 3^-{j * j}")
            if j:
                plo, phi = F[sigma[:-1]]
                if any(l < pl for l, pl in zip(box[0], plo)) or any(h > ph for h, ph in zip(box[1], phi)):
                    raise ValueError(f"F_{sigma} is not inside its parent")
        for s, t in zip(sigmas, sigmas[1:]):
            if not F[s][1][0] < F[t][0][0]:
                raise ValueError(f"first coordinates of F_{s} and F_{t} are not ordered")
    reps = [p for p, _ in cantor_points(level)]
    sigmas = list(itertools.product((0, 2), repeat=level))
    centre = lambda b: tuple((l + h) / 2 for l, h in zip(*b))
    vals = [centre(F[s]) for s in sigmas] + [F[sigmas[-1]][1]]
    data = FlatPathData.build(reps + [Fraction(1)], vals, alpha_max)
    inc = all(a[0] < b[0] for a, b in zip(data.values, data.values[1:]))
    return CantorArc(data, inc)
