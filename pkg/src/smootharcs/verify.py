"""End-to-end acceptance checks shared by ``smootharcs verify-all`` and the test suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .coloring import CantorSpace, ColoringTree, diagonal_extend, separated, soca_dichotomy, verify_connected
from .constructions import (
    c1_arc_through,
    c2_avoider,
    square_comparison,
    squiggle_witness_demo,
    star_divergence_test,
)
from .flatinterp import flat_bound, polygonal_arc_data, psi_interpolate, reference_sequence, verify_flat_bounds
from .geometry import SQRT2, epsilon_directed, min_direction_spread, nonsquiggly_check
from .hermite import c1_extend, hermite_cubic, verify_hermite_bounds
from .realsets import make_cantor
from .smoothtools import bump_complement


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    budget: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.seconds:.2f}s / {self.budget:g}s)"

    def to_json(self) -> dict:
        """Timing is left out so that reports are reproducible."""
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "budget": self.budget,
            "detail": self.detail,
        }


def _timed(number: int, name: str, budget: float, body: Callable[[], tuple[bool, dict]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = body()
    dt = time.perf_counter() - t0
    return CriterionResult(number, name, bool(ok) and dt < budget, dt, budget, detail)


def hermite_bounds(seed: int = 0, count: int = 1000, grid: int = 1024) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = [0.0, 0.0, 0.0]
        for _ in range(count):
            a1 = rng.uniform(-10, 10)
            a2 = a1 + rng.uniform(1e-3, 10)
            b1, b2 = rng.uniform(-10, 10, 2)
            s1, s2 = rng.uniform(-10, 10, 2)
            r = verify_hermite_bounds(hermite_cubic(a1, a2, b1, b2, s1, s2), grid)
            worst = [max(w, v) for w, v in zip(worst, (r.max_slope_dev, r.max_value_dev, r.max_secant_dev))]
        tol = 1e-9
        ok = worst[0] <= 3 + tol and worst[1] <= 2 + tol and worst[2] <= 3 + tol
        return ok, {"slope": worst[0], "value": worst[1], "secant": worst[2]}

    return _timed(1, "Hermite cubic deviation bounds", 5, body)


def c1_extension(level: int = 6) -> CriterionResult:
    steps = (1e-2, 1e-3, 1e-4, 1e-5)

    def body():
        D = make_cantor(level)
        F = c1_extend(D, lambda x: x * x, lambda x: 2 * x)
        ends = D.endpoints()
        exact = all(F.value(x) == x * x for x in ends)
        errs = []
        for tau in steps:
            worst = 0.0
            for x in ends:
                xf = float(x)
                cd = (float(F.value(xf + tau)) - float(F.value(xf - tau))) / (2 * tau)
                worst = max(worst, abs(cd - 2 * xf))
            errs.append(worst)
        mono = all(b < a for a, b in zip(errs, errs[1:]))
        return exact and mono, {"interpolates": exact, "central_diff_errors": errs}

    return _timed(2, "C1 extension from a Cantor set", 5, body)


def _fd(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, k: int, tau: float) -> np.ndarray:
    """Central k-th difference quotient."""
    total = np.zeros_like(x)
    for j in range(k + 1):
        total += (-1) ** j * math.comb(k, j) * fn(x + (k / 2 - j) * tau)
    return total / tau**k


def bump_zero_set(level: int = 6, tau: float = 1e-3) -> CriterionResult:
    def body():
        D = make_cantor(level)
        bumps = bump_complement(D, (0, 1))
        h = bumps.as_smooth()
        ends = np.array([float(x) for x in D.endpoints()])
        mids = np.array([(a + b) / 2 for a, b in bumps.intervals])
        zero = bool(np.all(h(ends) == 0))
        pos = bool(np.all(h(mids) > 0))
        fd = [float(np.max(np.abs(_fd(h, ends, k, tau)))) for k in range(1, 5)]
        ok = zero and pos and len(ends) == 2 ** (level + 1) and max(fd) <= 1e-6
        return ok, {"endpoints": len(ends), "zero_on_D": zero, "positive_in_gaps": pos, "fd_derivatives": fd}

    return _timed(3, "bump vanishing exactly on a Cantor set", 5, body)


def quotient_divergence(level: int = 5, count: int = 10) -> CriterionResult:
    def body():
        c = c2_avoider(level, samples=200)
        idx = np.round(np.linspace(0, len(c.K) - 1, count)).astype(int)
        rows = []
        ok = True
        for i in idx:
            st = star_divergence_test(c, c.K[i])
            rows.append(st.to_json())
            ok &= st.Q[-1] > 1e3 and st.increasing_tail
        ctl = star_divergence_test(square_comparison(), 0.3)
        ctl_ok = abs(ctl.Q[-1] - 1) <= 1e-3
        return ok and ctl_ok, {"tables": rows, "control": ctl.to_json()}

    return _timed(4, "second quotient blow-up on K", 30, body)


def squiggle_checks(level: int = 5) -> list[CriterionResult]:
    def convex():
        c = c2_avoider(level, samples=2)
        v = nonsquiggly_check(c.P)
        return v.nonsquiggly and len(c.P) == 2**level, {"points": len(c.P), "verdict": v.to_json()}

    def graph():
        d = squiggle_witness_demo(level)
        return not d.verdict.nonsquiggly, d.to_json()

    a = _timed(5, "convex construction is non-squiggly", 10, convex)
    b = _timed(5, "graph of f carries a squiggle witness", 10, graph)
    return [a, b]


def coloring_trees(depth: int = 6) -> CriterionResult:
    def body():
        E = CantorSpace(0, 1)
        W = separated(0.1)
        tree = soca_dichotomy(E, W, depth)
        detail: dict = {}
        if isinstance(tree, ColoringTree):
            bad = verify_connected(tree, W)
            tree_ok = not bad and tree.max_diam_ratio() <= 1 and tree.children_disjoint()
            detail["tree"] = {"depth": depth, "bad_pairs": len(bad)}
        else:
            tree_ok = False
            n = tree.node
            detail["tree"] = {
                "free_node": n.address,
                "box": n.box.to_json(),
                "probe_depth": tree.probe_depth,
                "failed_probes": len(tree.failed_probes),
            }
        ext_ok = True
        fns = {
            "x^2": (lambda x: x * x, lambda x: 2 * x),
            "x^3": (lambda x: x**3, lambda x: 3 * x * x),
            "sin": (np.sin, np.cos),
        }
        detail["extensions"] = {}
        for name, (f, df) in fns.items():
            def g(x, y, f=f, df=df):
                same = x == y
                return np.where(same, df(x), (f(y) - f(x)) / np.where(same, 1.0, y - x))

            ext = diagonal_extend(g, E, depth)
            err = float(np.max(np.abs(ext.leaf_values.ravel() - df(ext.leaf_points))))
            good = err <= 2.0**-depth + ext.mesh and ext.nested_ok()
            ext_ok &= good
            detail["extensions"][name] = {"offset": ext.offset, "error": err, "mesh": ext.mesh, "ok": good}
        return tree_ok and ext_ok, detail

    return _timed(6, "coloring tree and diagonal extension", 20, body)


def c1_arc(level: int = 4, depth: int = 6) -> CriterionResult:
    def body():
        C = make_cantor(level, (0, Fraction(2, 5)))
        xs = C.endpoints()
        arc = c1_arc_through([(x, x * x) for x in xs], depth)
        err = max(abs(h[0] - 2 * float(x)) for x, h in zip(arc.xs, arc.slopes))
        ok = arc.max_interp_error == 0 and err <= 2.0**-depth + arc.mesh
        return ok, {"samples": len(xs), "interp_error": arc.max_interp_error, "slope_error": err, "mesh": arc.mesh}

    return _timed(7, "C1 arc through a directed Cantor sample", 20, body)


def flat_constants(J: int = 6, samples: int = 1000) -> CriterionResult:
    def body():
        arc = polygonal_arc_data(reference_sequence(J))
        M = arc.data.flatness.M_sq
        bound_ok = all(m <= flat_bound(a) ** 2 for a, m in enumerate(M))
        rep = verify_flat_bounds(psi_interpolate(arc.data), k_max=3, samples=samples)
        return bound_ok and rep.passed, {"M": list(arc.data.M), "within_bound": bound_ok, "bounds": rep.to_json()}

    return _timed(8, "flatness constants and interpolation bounds", 10, body)


def _grid_spread(X: np.ndarray, directions: int = 3600) -> float:
    i, j = np.triu_indices(len(X), 1)
    d = X[j] - X[i]
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    th = np.arange(directions) * math.pi / directions
    v = np.column_stack([np.cos(th), np.sin(th)])
    dots = np.abs(d @ v.T)
    return float(np.min(np.sqrt(np.clip(2 - 2 * dots.min(axis=0), 0, None))))


def directed_exactness(seed: int = 0, sets: int = 100, size: int = 10) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        always = True
        for _ in range(sets):
            X = rng.uniform(-1, 1, (size, 2))
            worst = max(worst, abs(min_direction_spread(X) - _grid_spread(X)))
            always &= epsilon_directed(X, SQRT2).directed
        for dim in (2, 3, 5):
            always &= epsilon_directed(rng.normal(size=(size, dim)), SQRT2).directed
        return worst <= 1e-3 and always, {"max_grid_gap": worst, "sqrt2_directed": always}

    return _timed(9, "exact direction spread", 5, body)


def run_all(seed: int = 0) -> list[CriterionResult]:
    out = [hermite_bounds(seed), c1_extension(), bump_zero_set(), quotient_divergence()]
    out += squiggle_checks()
    out += [coloring_trees(), c1_arc(), flat_constants(), directed_exactness(seed)]
    return out
