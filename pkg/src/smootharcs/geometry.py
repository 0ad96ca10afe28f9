"""Direction spread, exact orientation predicates and quadruple scans for planar sets."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .realsets import Real, as_fraction

SQRT2 = math.sqrt(2.0)
GRAPH_EPS = 2 * math.sin(math.radians(22.5))
REL_SLACK = 1e-12
# Shewchuk's first-stage bound for the 2x2 orientation determinant
_ORIENT_ERRBOUND = (3.0 + 16.0 * 2.0**-53) * 2.0**-53


@dataclass(frozen=True)
class PointSet:
    """Distinct points of R^n (n >= 2) with exact (Fraction) or float coordinates."""

    points: tuple[tuple[Real, ...], ...]
    exact: bool = False

    def __post_init__(self) -> None:
        pts = tuple(tuple(p) for p in self.points)
        if not pts:
            raise ValueError("empty point set")
        dim = len(pts[0])
        if dim < 2 or any(len(p) != dim for p in pts):
            raise ValueError("points must share a dimension >= 2")
        if self.exact:
            pts = tuple(tuple(as_fraction(c) for c in p) for p in pts)
        else:
            pts = tuple(tuple(float(c) for c in p) for p in pts)
            if not np.all(np.isfinite(pts)):
                raise ValueError("non-finite coordinate")
        if len(set(pts)) != len(pts):
            raise ValueError("points must be pairwise distinct")
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, pts: "PointSet | Iterable[Sequence[Real]]") -> "PointSet":
        if isinstance(pts, PointSet):
            return pts
        pts = [tuple(p) for p in pts]
        exact = all(isinstance(c, (Fraction, int)) for p in pts for c in p)
        return cls(tuple(pts), exact=exact)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def array(self) -> np.ndarray:
        return np.array([[float(c) for c in p] for p in self.points])

    def fractions(self) -> list[tuple[Fraction, ...]]:
        return [tuple(as_fraction(c) for c in p) for p in self.points]

    def to_json(self) -> dict:
        return {"points": [[float(c) for c in p] for p in self.points], "exact": self.exact}


def direction(x: Sequence[Real], y: Sequence[Real]) -> np.ndarray:
    """Unit vector from y towards x."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    n = np.linalg.norm(d)
    if n == 0.0:
        raise ValueError("direction of a point to itself is undefined")
    return d / n


# --- epsilon-directed ---------------------------------------------------------


@dataclass(frozen=True)
class DirectionVerdict:
    directed: bool
    eps: float
    spread: float  # smallest eps found for this set
    witness: tuple[float, ...] | None
    violating_pair: tuple[int, int] | None
    certified: bool  # False for a best-effort "no" in dimension > 2

    def to_json(self) -> dict:
        return {
            "directed": self.directed,
            "eps": self.eps,
            "spread": self.spread,
            "witness": list(self.witness) if self.witness else None,
            "violating_pair": list(self.violating_pair) if self.violating_pair else None,
            "certified": self.certified,
        }


def _pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(n, k=1)
    return i, j


def _chord(angle: np.ndarray) -> np.ndarray:
    return 2.0 * np.sin(angle / 2.0)


def _spread_2d(X: np.ndarray) -> tuple[float, np.ndarray, tuple[int, int]]:
    """Exact smallest covering arc of pairwise directions on the circle mod pi."""
    i, j = _pairs(len(X))
    d = X[i] - X[j]
    theta = np.mod(np.arctan2(d[:, 1], d[:, 0]), math.pi)
    order = np.argsort(theta, kind="stable")
    ts = theta[order]
    gaps_ = np.diff(np.concatenate([ts, [ts[0] + math.pi]]))
    g = int(np.argmax(gaps_))
    # the covering arc starts just after the largest gap
    start = ts[(g + 1) % len(ts)]
    width = math.pi - float(gaps_[g])
    centre = start + width / 2
    v = np.array([math.cos(centre), math.sin(centre)])
    dev = np.abs(np.mod(theta - centre + math.pi / 2, math.pi) - math.pi / 2)
    k = int(np.argmax(dev))
    return float(_chord(np.array(width / 2))), v, (int(i[k]), int(j[k]))


def _sphere_grid(dim: int, count: int = 4000) -> np.ndarray:
    rng = np.random.default_rng(0)
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _spread_nd(X: np.ndarray) -> tuple[float, np.ndarray, tuple[int, int]]:
    i, j = _pairs(len(X))
    rho = X[i] - X[j]
    rho /= np.linalg.norm(rho, axis=1, keepdims=True)
    cands = np.vstack([rho, _sphere_grid(X.shape[1])])
    best, best_v, best_pair = math.inf, cands[0], (0, 1)
    for start in range(0, len(cands), 512):
        c = cands[start : start + 512]
        dots = np.abs(rho @ c.T)
        worst = np.sqrt(np.clip(2 - 2 * dots.min(axis=0), 0, None))
        m = int(np.argmin(worst))
        if worst[m] < best:
            k = int(np.argmin(dots[:, m]))
            best, best_v, best_pair = float(worst[m]), c[m], (int(i[k]), int(j[k]))
    return best, best_v, best_pair


def min_direction_spread(P: PointSet | Iterable[Sequence[Real]]) -> float:
    """Smallest eps making P eps-directed (exact in the plane, best effort above)."""
    P = PointSet.of(P)
    if len(P) < 2:
        raise ValueError("need at least two points")
    X = P.array()
    return (_spread_2d(X) if P.dim == 2 else _spread_nd(X))[0]


def epsilon_directed(P: PointSet | Iterable[Sequence[Real]], eps: float) -> DirectionVerdict:
    P = PointSet.of(P)
    if len(P) < 2:
        raise ValueError("need at least two points")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    X = P.array()
    planar = P.dim == 2
    spread, v, pair = _spread_2d(X) if planar else _spread_nd(X)
    directed = eps >= SQRT2 or spread <= eps * (1 + REL_SLACK) + REL_SLACK
    return DirectionVerdict(
        directed=directed,
        eps=float(eps),
        spread=spread,
        witness=tuple(float(c) for c in v),
        violating_pair=None if directed else pair,
        certified=planar or directed,
    )


# --- orientation and interior tests --------------------------------------------


def orient2d(a: Sequence[Real], b: Sequence[Real], c: Sequence[Real]) -> int:
    """Sign of the signed area of triangle abc (+1 counter-clockwise), exact."""
    if all(isinstance(v, float) for v in (*a, *b, *c)):
        l = (b[0] - a[0]) * (c[1] - a[1])
        r = (b[1] - a[1]) * (c[0] - a[0])
        det = l - r
        if abs(det) > _ORIENT_ERRBOUND * (abs(l) + abs(r)):
            return 1 if det > 0 else -1
    A, B, C = ([as_fraction(v) for v in p] for p in (a, b, c))
    det = (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0])
    return (det > 0) - (det < 0)


def strictly_inside(t: Sequence[Real], x: Sequence[Real], y: Sequence[Real], z: Sequence[Real]) -> bool:
    o = orient2d(x, y, z)
    if o == 0:
        return False
    return orient2d(x, y, t) == o and orient2d(y, z, t) == o and orient2d(z, x, t) == o


def _orient_many(X: np.ndarray, a: np.ndarray, b: np.ndarray, F: list, pts_c: np.ndarray | None = None) -> np.ndarray:
    """Orientation signs of (a_k, b_k, c) for every row k and every point c (or c = pts_c[k])."""
    A, B = X[a], X[b]
    if pts_c is None:
        C = X[None, :, :]
        A, B = A[:, None, :], B[:, None, :]
    else:
        C = X[pts_c]
    l = (B[..., 0] - A[..., 0]) * (C[..., 1] - A[..., 1])
    r = (B[..., 1] - A[..., 1]) * (C[..., 0] - A[..., 0])
    det = l - r
    sign = np.sign(det).astype(np.int8)
    unsure = np.abs(det) <= _ORIENT_ERRBOUND * (np.abs(l) + np.abs(r))
    # both products exactly zero means a coordinate difference vanished: det is exactly 0
    unsure &= (l != 0) | (r != 0)
    cidx = np.arange(len(X))[None, :] if pts_c is None else pts_c
    repeated = (cidx == np.reshape(a, (-1,) + (1,) * (det.ndim - 1))) | (cidx == np.reshape(b, (-1,) + (1,) * (det.ndim - 1)))
    sign[repeated] = 0
    unsure &= ~repeated
    if unsure.any():
        for idx in zip(*np.nonzero(unsure)):
            k = idx[0]
            c = idx[1] if pts_c is None else pts_c[k]
            pa, pb, pc = F[a[k]], F[b[k]], F[c]
            d = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
            sign[idx] = (d > 0) - (d < 0)
    return sign


@dataclass(frozen=True)
class SquiggleVerdict:
    nonsquiggly: bool
    delta: float
    witness: tuple[tuple[Real, ...], ...] | None = None  # (x, y, z, t) with t inside xyz
    witness_indices: tuple[int, int, int, int] | None = None

    def to_json(self) -> dict:
        return {
            "nonsquiggly": self.nonsquiggly,
            "delta": "inf" if math.isinf(self.delta) else self.delta,
            "witness": [[float(c) for c in p] for p in self.witness] if self.witness else None,
            "witness_indices": list(self.witness_indices) if self.witness_indices else None,
        }


def _sq_dist(p: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    return (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2


def _diam_ok(quad: Sequence[Sequence[Fraction]], delta: float) -> bool:
    if math.isinf(delta):
        return True
    d2 = as_fraction(delta) ** 2
    return all(_sq_dist(p, q) <= d2 for p, q in itertools.combinations(quad, 2))


TRIPLE_CHUNK = 4096


def _interior_hits(X: np.ndarray, F: list, tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(row, t) pairs with point t strictly inside triangle tri[row]."""
    i, j, k = tri[:, 0], tri[:, 1], tri[:, 2]
    o = _orient_many(X, i, j, F, pts_c=k).astype(np.int8)
    live = o != 0
    if not live.any():
        return np.empty(0, int), np.empty(0, int)
    tri, o = tri[live], o[live]
    i, j, k = tri[:, 0], tri[:, 1], tri[:, 2]
    inside = _orient_many(X, i, j, F) == o[:, None]
    inside &= _orient_many(X, j, k, F) == o[:, None]
    inside &= _orient_many(X, k, i, F) == o[:, None]
    rows, ts = np.nonzero(inside)
    idx = np.nonzero(live)[0][rows]
    return idx, ts


def _lex_order(P: PointSet) -> list[int]:
    return sorted(range(len(P)), key=lambda m: tuple(P.points[m]))


def nonsquiggly_check(P: PointSet | Iterable[Sequence[Real]], delta: float = math.inf) -> SquiggleVerdict:
    """Scan all quadruples of diameter <= delta for a point strictly inside the other three's triangle.

    The witness returned is the first in lexicographic order of the sorted
    index quadruple (points sorted lexicographically), then of the inner point.
    """
    P = PointSet.of(P)
    if P.dim != 2:
        raise ValueError("non-squiggliness is a planar notion")
    if not delta > 0:
        raise ValueError("delta must be positive")
    n = len(P)
    if n < 4:
        return SquiggleVerdict(True, float(delta))
    order = _lex_order(P)
    X = P.array()[order]
    F = [P.fractions()[m] for m in order]
    dist = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    tri_all = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
    best: tuple | None = None
    for start in range(0, len(tri_all), TRIPLE_CHUNK):
        tri = tri_all[start : start + TRIPLE_CHUNK]
        rows, ts = _interior_hits(X, F, tri)
        if rows.size == 0:
            continue
        quads = np.column_stack([tri[rows], ts])
        if not math.isinf(delta):
            a, b, c, t = quads.T
            d = np.max([dist[a, b], dist[a, c], dist[b, c], dist[a, t], dist[b, t], dist[c, t]], axis=0)
            quads = quads[d <= delta * (1 + 1e-9)]
        keys = np.column_stack([np.sort(quads, axis=1), quads[:, 3]])
        for m in np.lexsort(keys.T[::-1]):
            a, b, c, t = quads[m].tolist()
            if _diam_ok([F[a], F[b], F[c], F[t]], delta):
                key = tuple(keys[m].tolist())
                if best is None or key < best[0]:
                    best = (key, (a, b, c, t))
                break
    if best is None:
        return SquiggleVerdict(True, float(delta))
    a, b, c, t = best[1]
    pts = tuple(P.points[order[m]] for m in (a, b, c, t))
    return SquiggleVerdict(False, float(delta), pts, tuple(order[m] for m in (a, b, c, t)))


def _creates_witness(F: list, chosen: list[int], new: int, delta: float) -> bool:
    """Does adding point ``new`` to the non-squiggly set ``chosen`` create a witness quadruple?"""
    for a, b, c in itertools.combinations(chosen, 3):
        quad = (a, b, c, new)
        if not _diam_ok([F[m] for m in quad], delta):
            continue
        if strictly_inside(F[new], F[a], F[b], F[c]):
            return True
        for t, (x, y) in ((a, (b, c)), (b, (a, c)), (c, (a, b))):
            if strictly_inside(F[t], F[x], F[y], F[new]):
                return True
    return False


def _convex_seed(F: list, order: list[int], delta: float) -> list[int]:
    """Lexicographically first non-squiggly 4-subset, or [] if none exists."""
    for quad in itertools.combinations(order, 4):
        if not _creates_witness(F, list(quad[:3]), quad[3], delta):
            return list(quad)
    return []


def extract_nonsquiggly(P: PointSet | Iterable[Sequence[Real]], delta: float = math.inf) -> PointSet:
    """Maximal non-squiggly subset by greedy insertion in lexicographic order.

    The greedy pass starts from the lexicographically first non-squiggly
    4-subset when one exists; otherwise plain greedy insertion can stall at
    three points.
    """
    P = PointSet.of(P)
    if P.dim != 2:
        raise ValueError("non-squiggliness is a planar notion")
    F = P.fractions()
    order = _lex_order(P)
    chosen = _convex_seed(F, order, delta)
    for m in order:
        if m in chosen:
            continue
        if len(chosen) < 3 or not _creates_witness(F, chosen, m, delta):
            chosen.append(m)
    chosen.sort(key=order.index)
    return PointSet(tuple(P.points[m] for m in chosen), exact=P.exact)


# --- rotation into a graph ---------------------------------------------------


@dataclass(frozen=True)
class GraphFrame:
    """Orthogonal change of frame x' = R x, and the resulting graph table."""

    rotation: np.ndarray
    points: np.ndarray  # rotated points, sorted by first coordinate
    order: tuple[int, ...]  # original index of each row
    identity: bool

    @property
    def xs(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.points[:, 1:]

    def table(self) -> dict[float, tuple[float, ...]]:
        return {float(x): tuple(float(v) for v in y) for x, y in zip(self.xs, self.ys)}

    def to_original(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts) @ self.rotation


def _rotation_to_axis(v: np.ndarray) -> np.ndarray:
    """Proper rotation R with R v = e1."""
    n = v.size
    e1 = np.zeros(n)
    e1[0] = 1.0
    if np.allclose(v, e1):
        return np.eye(n)
    if n == 2:
        c, s = v
        return np.array([[c, s], [-s, c]])
    w = v - e1
    H = np.eye(n) - 2 * np.outer(w, w) / (w @ w)
    H[-1] *= -1  # flip one non-leading axis so det = +1
    return H


def _slopes_ok(Y: np.ndarray, tol: float = 1e-12) -> tuple[bool, tuple[int, int] | None]:
    n = len(Y)
    i, j = _pairs(n)
    dx = np.abs(Y[j, 0] - Y[i, 0])
    dy = np.abs(Y[j, 1:] - Y[i, 1:]).max(axis=1)
    bad = dy > dx * (1 + tol) + tol * np.abs(Y).max()
    if bad.any():
        k = int(np.argmax(bad))
        return False, (int(i[k]), int(j[k]))
    return True, None


def rotate_to_graph(P: PointSet | Iterable[Sequence[Real]], prefer_axis: bool = False) -> GraphFrame:
    """Rotate a 2 sin(22.5 deg)-directed set so it becomes the graph of a function of x.

    With ``prefer_axis`` the input frame is kept whenever its coordinate slopes
    already lie in [-1, 1].
    """
    P = PointSet.of(P)
    verdict = epsilon_directed(P, GRAPH_EPS)
    if not verdict.directed:
        i, j = verdict.violating_pair
        raise ValueError(
            f"set is not {GRAPH_EPS:.6f}-directed (spread {verdict.spread:.6f}); "
            f"violating pair {P.points[i]}, {P.points[j]}"
        )
    X = P.array()
    R = np.eye(P.dim)
    identity = prefer_axis and _slopes_ok(X)[0]
    if not identity:
        R = _rotation_to_axis(np.asarray(verdict.witness))
    Y = X @ R.T
    order = np.argsort(Y[:, 0], kind="stable")
    Y = Y[order]
    if np.any(np.diff(Y[:, 0]) <= 0):
        k = int(np.argmin(np.diff(Y[:, 0])))
        raise ValueError(f"duplicate abscissa after rotation at {P.points[order[k]]}, {P.points[order[k + 1]]}")
    ok, pair = _slopes_ok(Y)
    if not ok:
        raise ValueError(f"slope outside [-1, 1] after rotation for points {pair}")
    return GraphFrame(R, Y, tuple(int(m) for m in order), bool(identity))
