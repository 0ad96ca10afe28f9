"""C-infinity bumps, the smooth step built from them, quadrature and monotone inversion.

Derivatives of exp(-1/q) with q quadratic follow the recurrence

    h^(k) = P_k / q^(2k) * h,    P_{k+1} = q^2 P_k' + (1 - 2 k q) q' P_k,

evaluated in log space so that neither the prefactor nor the exponential
overflows near the ends of the support.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .realsets import ClosedSet, Real, gaps

DEFAULT_K_MAX = 6
ORDER_CAP = 20
ENDPOINT_CLAMP = 1e-12
SUP_GRID = 200_001

ArrayLike = float | np.ndarray


class QuadratureError(RuntimeError):
    """Adaptive quadrature hit its recursion cap before meeting the tolerance."""


@dataclass(frozen=True)
class SmoothFn:
    """A real function with derivative evaluators up to order ``k_max``.

    ``evaluate(x, k)`` must accept float arrays.  ``sup`` optionally carries
    known bounds sup |f^(k)| for k = 0..k_max.
    """

    evaluate: Callable[[np.ndarray, int], np.ndarray]
    k_max: int
    support: tuple[float, float] | None = None
    sup: tuple[float, ...] | None = None
    name: str = ""

    def derivative(self, x: ArrayLike, k: int = 1) -> ArrayLike:
        if not 0 <= k <= self.k_max:
            raise ValueError(f"derivative order {k} outside 0..{self.k_max}")
        arr = np.asarray(x, dtype=float)
        out = self.evaluate(np.atleast_1d(arr), k)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return self.derivative(x, 0)


# --- bumps -----------------------------------------------------------------


def _prefactors(q: Polynomial, order: int) -> list[Polynomial]:
    dq = q.deriv()
    ps = [Polynomial([1.0])]
    for k in range(order):
        p = ps[-1]
        ps.append(q * q * p.deriv() + (1 - 2 * k * q) * dq * p)
    return ps


@lru_cache(maxsize=None)
def _unit_prefactors() -> tuple[Polynomial, ...]:
    return tuple(_prefactors(Polynomial([0.0, 1.0, -1.0]), ORDER_CAP))


def _bump_eval(u: np.ndarray, q: np.ndarray, inside: np.ndarray, p: Polynomial, k: int) -> np.ndarray:
    out = np.zeros_like(u)
    if not inside.any():
        return out
    uq, qq = u[inside], q[inside]
    logh = -1.0 / qq
    if k == 0:
        out[inside] = np.exp(logh)
        return out
    pv = p(uq)
    with np.errstate(divide="ignore"):
        mag = np.log(np.abs(pv)) + logh - 2 * k * np.log(qq)
    out[inside] = np.sign(pv) * np.exp(mag)
    return out


def _unit_bump_eval(s: np.ndarray, k: int) -> np.ndarray:
    inside = (s > ENDPOINT_CLAMP) & (s < 1 - ENDPOINT_CLAMP)
    q = s * (1 - s)
    return _bump_eval(s, q, inside, _unit_prefactors()[k], k)


def bump_interval(a: Real, b: Real, k_max: int = DEFAULT_K_MAX) -> SmoothFn:
    """exp(-1/((x-a)(b-x))) on (a, b) and 0 elsewhere."""
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError(f"bump needs a < b, got a={a}, b={b}")
    if not 0 <= k_max <= ORDER_CAP:
        raise ValueError(f"k_max must lie in 0..{ORDER_CAP}")
    if (a, b) == (0.0, 1.0):
        return SmoothFn(_unit_bump_eval, k_max, (0.0, 1.0), name="bump(0,1)")
    m, r = (a + b) / 2, (b - a) / 2
    # in u = x - m: q = r^2 - u^2
    ps = _prefactors(Polynomial([r * r, 0.0, -1.0]), k_max)

    def evaluate(x: np.ndarray, k: int) -> np.ndarray:
        inside = (x > a + ENDPOINT_CLAMP) & (x < b - ENDPOINT_CLAMP)
        u = x - m
        return _bump_eval(u, r * r - u * u, inside, ps[k], k)

    return SmoothFn(evaluate, k_max, (a, b), name=f"bump({a},{b})")


def unit_bump(k_max: int = DEFAULT_K_MAX) -> SmoothFn:
    return bump_interval(0, 1, k_max)


@lru_cache(maxsize=None)
def unit_bump_sups() -> tuple[float, ...]:
    """Grid maxima of |h01^(k)| for k = 0..ORDER_CAP."""
    s = np.linspace(0.0, 1.0, SUP_GRID)
    return tuple(float(np.max(np.abs(_unit_bump_eval(s, k)))) for k in range(ORDER_CAP + 1))


@dataclass(frozen=True)
class GapBumps:
    """h_U = sum_n c_n h01((x - a_n)/L_n) over the bounded gaps of D.

    The unit bump is rescaled onto each gap instead of using exp(-1/((x-a)(b-x)))
    directly, which underflows to zero on short gaps.
    """

    D: ClosedSet
    intervals: tuple[tuple[float, float], ...]  # gaps in positional order
    weights: tuple[float, ...]
    k_max: int
    _lefts: list[float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_lefts", [a for a, _ in self.intervals])

    def gap_of(self, x: np.ndarray) -> np.ndarray:
        """Index of the gap whose open interval contains x, else -1."""
        idx = np.searchsorted(self._lefts, x, side="right") - 1
        ok = idx >= 0
        ends = np.array([b for _, b in self.intervals] or [0.0])
        ok &= x < ends[np.clip(idx, 0, None)]
        return np.where(ok, idx, -1)

    def evaluate(self, x: np.ndarray, k: int) -> np.ndarray:
        out = np.zeros_like(x)
        if not self.intervals:
            return out
        idx = self.gap_of(x)
        sel = idx >= 0
        if not sel.any():
            return out
        i = idx[sel]
        a = np.array(self._lefts)[i]
        L = np.array([b - a0 for a0, b in self.intervals])[i]
        c = np.array(self.weights)[i]
        out[sel] = c * L ** (-k) * _unit_bump_eval((x[sel] - a) / L, k)
        return out

    def as_smooth(self) -> SmoothFn:
        lo = self.intervals[0][0] if self.intervals else None
        hi = self.intervals[-1][1] if self.intervals else None
        support = (lo, hi) if self.intervals else None
        return SmoothFn(self.evaluate, self.k_max, support, name="h_U")


def default_weights(intervals: Sequence[tuple[float, float]], k_max: int) -> tuple[float, ...]:
    """c_n = 2^-n / (1 + max_k sup|h_Jn^(k)|), n counted over gaps by decreasing length."""
    sups = unit_bump_sups()
    rank = sorted(range(len(intervals)), key=lambda i: (-(intervals[i][1] - intervals[i][0]), intervals[i][0]))
    w = [0.0] * len(intervals)
    for n, i in enumerate(rank, start=1):
        L = intervals[i][1] - intervals[i][0]
        worst = max(sups[k] * L ** (-k) for k in range(k_max + 1))
        w[i] = 2.0**-n / (1.0 + worst)
    return tuple(w)


def bump_complement(
    D: ClosedSet,
    ambient: Sequence[Real] | None = None,
    k_max: int = DEFAULT_K_MAX,
    weights: Sequence[float] | None = None,
) -> GapBumps:
    """Nonnegative smooth function vanishing exactly on D inside the ambient interval."""
    if not 0 <= k_max <= ORDER_CAP:
        raise ValueError(f"k_max must lie in 0..{ORDER_CAP}")
    intervals = tuple((float(a), float(b)) for a, b in gaps(D, ambient).bounded)
    if weights is None:
        w = default_weights(intervals, k_max)
    else:
        w = tuple(float(c) for c in weights)
        if len(w) != len(intervals):
            raise ValueError(f"expected {len(intervals)} weights, got {len(w)}")
        if any(not c > 0 for c in w):
            raise ValueError("weights must be positive")
    return GapBumps(D, intervals, w, k_max)


# --- quadrature --------------------------------------------------------------

_GK_X = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_GK_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_GK_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
NODES = np.concatenate([-_GK_X, _GK_X[-2::-1]])
WK = np.concatenate([_GK_WK, _GK_WK[-2::-1]])
WG = np.zeros(15)
WG[1::2] = np.concatenate([_GK_WG, _GK_WG[-2::-1]])


def _vectorize(fn: Callable) -> Callable[[np.ndarray], np.ndarray]:
    def f(x: np.ndarray) -> np.ndarray:
        try:
            y = np.asarray(fn(x), dtype=float)
            if y.shape == x.shape:
                return y
        except TypeError:
            pass
        return np.array([float(fn(float(v))) for v in x.ravel()]).reshape(x.shape)

    return f


def gk15(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kronrod estimate and |Kronrod - Gauss| on each panel [a_i, b_i] (vectorized)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = (b - a) / 2
    x = ((a + b) / 2)[..., None] + half[..., None] * NODES
    fx = f(x)
    k = half * (fx @ WK)
    g = half * (fx @ WG)
    return k, np.abs(k - g)


def integrate(fn: Callable, a: Real, b: Real, tol: float = 1e-12, max_depth: int = 48) -> float:
    """Adaptive Gauss-Kronrod (7/15) quadrature with estimated error <= tol."""
    a, b = float(a), float(b)
    if b < a:
        raise ValueError(f"integrate needs a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0
    if tol <= 0:
        raise ValueError("tol must be positive")
    f = _vectorize(fn)
    total = 0.0
    stack = [(a, b, tol, 0)]
    while stack:
        lo, hi, t, depth = stack.pop()
        val, err = gk15(f, np.array(lo), np.array(hi))
        if err <= t or hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi))):
            total += float(val)
            continue
        if depth >= max_depth:
            raise QuadratureError(f"no convergence on [{lo}, {hi}] after {depth} bisections (tol {t:.3g})")
        mid = (lo + hi) / 2
        stack.append((mid, hi, t / 2, depth + 1))
        stack.append((lo, mid, t / 2, depth + 1))
    return total


# --- smooth step -------------------------------------------------------------

STEP_PANELS = 2000


@lru_cache(maxsize=None)
def _step_table() -> tuple[np.ndarray, np.ndarray, float]:
    """Panel edges on [0, 1/2], cumulative integrals of h01 at the edges, normaliser I."""
    edges = np.linspace(0.0, 0.5, STEP_PANELS + 1)
    h0 = lambda s: _unit_bump_eval(s.ravel(), 0).reshape(s.shape)
    vals, _ = gk15(h0, edges[:-1], edges[1:])
    cum = np.concatenate([[0.0], np.cumsum(vals)])
    return edges, cum, 2.0 * float(cum[-1])


def step_normalizer() -> float:
    """I = integral of h01 over [0, 1]."""
    return _step_table()[2]


def _step_value(t: np.ndarray) -> np.ndarray:
    edges, cum, total = _step_table()
    t = np.clip(t, 0.0, 1.0)
    upper = t > 0.5
    s = np.where(upper, 1.0 - t, t)
    j = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, STEP_PANELS - 1)
    h0 = lambda x: _unit_bump_eval(x.ravel(), 0).reshape(x.shape)
    part, _ = gk15(h0, edges[j], s)
    low = (cum[j] + part) / total
    return np.where(upper, 1.0 - low, low)


def smooth_step(k_max: int = DEFAULT_K_MAX) -> SmoothFn:
    """psi(t) = int_0^t h01 / int_0^1 h01, with psi = 0 on t <= 0 and 1 on t >= 1."""
    if not 0 <= k_max <= ORDER_CAP + 1:
        raise ValueError(f"k_max must lie in 0..{ORDER_CAP + 1}")
    I = step_normalizer()
    bump_sups = unit_bump_sups()

    def evaluate(t: np.ndarray, k: int) -> np.ndarray:
        if k == 0:
            return _step_value(t)
        return _unit_bump_eval(t, k - 1) / I

    sup = (1.0,) + tuple(bump_sups[k - 1] / I for k in range(1, k_max + 1))
    return SmoothFn(evaluate, k_max, (0.0, 1.0), sup=sup, name="psi")


def step_inverse(r: ArrayLike, iterations: int = 64) -> ArrayLike:
    """Vectorised bisection for psi^-1 on [0, 1]."""
    arr = np.asarray(r, dtype=float)
    y = np.atleast_1d(arr)
    if np.any((y < 0) | (y > 1)):
        raise ValueError("psi takes values in [0, 1]")
    lo = np.zeros_like(y)
    hi = np.ones_like(y)
    for _ in range(iterations):
        mid = (lo + hi) / 2
        below = _step_value(mid) < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= np.spacing(hi)):
            break
    x = (lo + hi) / 2
    return float(x[0]) if arr.ndim == 0 else x.reshape(arr.shape)


# --- inversion ---------------------------------------------------------------

MONOTONE_SAMPLES = 65


def invert_monotone(fn: Callable, y: float, bracket: Sequence[Real], tol: float = 1e-12) -> float:
    """x in the bracket with |fn(x) - y| <= tol, by bisection."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"bad bracket [{lo}, {hi}]")
    f = lambda x: float(fn(x))
    probe = np.linspace(lo, hi, MONOTONE_SAMPLES)
    vals = [f(x) for x in probe]
    for (x0, v0), (x1, v1) in zip(zip(probe, vals), zip(probe[1:], vals[1:])):
        if v1 < v0:
            raise ValueError(f"function is not increasing: f({x0})={v0} > f({x1})={v1}")
    flo, fhi = vals[0], vals[-1]
    if not flo - tol <= y <= fhi + tol:
        raise ValueError(f"y={y} outside range [{flo}, {fhi}]")
    # start from the sampled cell that brackets y
    k = max(0, min(bisect.bisect_left(vals, y) - 1, MONOTONE_SAMPLES - 2))
    a, b = float(probe[k]), float(probe[k + 1])
    best, best_err = a, abs(f(a) - y)
    while True:
        m = (a + b) / 2
        fm = f(m)
        err = abs(fm - y)
        if err < best_err:
            best, best_err = m, err
        if err <= tol:
            return m
        if m in (a, b):
            break
        if fm < y:
            a = m
        else:
            b = m
    for x in (a, b):
        if abs(f(x) - y) <= tol:
            return x
    raise ValueError(f"cannot reach tolerance {tol} at y={y}; closest f(x) differs by {best_err:.3g}")
