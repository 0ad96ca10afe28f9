"""Finite-depth open-coloring trees on a middle-thirds Cantor set.

A coloring W is an oracle on pairs (x, y) that either certifies membership
with an openness margin r (every pair within r in the max metric on pairs is
also in W) or answers "not known".  Trees are built from Cantor intervals;
a split of a node is certified when one center query on a pair of
sub-intervals has a margin exceeding their half-widths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from .realsets import CANTOR_LEVEL_CAP, Real, _cantor_numerators, as_fraction

PROBE_BUDGET = 64
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class InW:
    margin: float

    def __post_init__(self) -> None:
        if not self.margin > 0:
            raise ValueError("InW needs a positive margin")


class NotKnown:
    _instance: "NotKnown | None" = None

    def __new__(cls) -> "NotKnown":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NOT_KNOWN"


NOT_KNOWN = NotKnown()
Answer = Union[InW, NotKnown]


@dataclass(frozen=True)
class PairColoring:
    oracle: Callable[[float, float], Answer]
    name: str = "W"

    def query(self, x: float, y: float) -> Answer:
        return self.oracle(x, y)

    def checked_query(self, x: float, y: float) -> Answer:
        """Query both orders and insist that the answers agree."""
        a, b = self.oracle(x, y), self.oracle(y, x)
        same = (a is NOT_KNOWN and b is NOT_KNOWN) or (
            isinstance(a, InW) and isinstance(b, InW) and abs(a.margin - b.margin) <= SYMMETRY_TOL * max(1.0, a.margin)
        )
        if not same:
            raise ValueError(f"{self.name} is not symmetric at ({x}, {y}): {a} vs {b}")
        return a


def off_diagonal() -> PairColoring:
    """Every off-diagonal pair, with margin half the distance to the diagonal."""
    return PairColoring(lambda x, y: InW(abs(x - y) / 2) if x != y else NOT_KNOWN, "off-diagonal")


def separated(threshold: float) -> PairColoring:
    """Pairs with |x - y| > threshold."""

    def oracle(x: float, y: float) -> Answer:
        gap = abs(x - y) - threshold
        return InW(gap / 2) if gap > 0 else NOT_KNOWN

    return PairColoring(oracle, f"|x-y|>{threshold}")


def empty_coloring() -> PairColoring:
    return PairColoring(lambda x, y: NOT_KNOWN, "empty")


def direction_cover(
    embed: Callable[[float], np.ndarray],
    centre_deg: float,
    half_width_deg: float,
    lipschitz: float,
) -> PairColoring:
    """Pairs whose direction e(x) - e(y), taken mod 180 degrees, lies in an open arc.

    The margin keeps the direction inside the arc under perturbations of x, y
    by r, given that e is ``lipschitz``-Lipschitz.
    """
    c = math.radians(centre_deg)
    w = math.radians(half_width_deg)

    def oracle(x: float, y: float) -> Answer:
        d = np.asarray(embed(x), dtype=float) - np.asarray(embed(y), dtype=float)
        n = float(np.hypot(*d[:2]))
        if n == 0.0:
            return NOT_KNOWN
        theta = math.atan2(d[1], d[0])
        off = abs((theta - c + math.pi / 2) % math.pi - math.pi / 2)
        slack = w - off
        if slack <= 0:
            return NOT_KNOWN
        return InW(n * math.sin(min(slack, math.pi / 2)) / (2 * lipschitz))

    return PairColoring(oracle, f"dir({centre_deg}+-{half_width_deg})")


# --- Cantor intervals ----------------------------------------------------------


@dataclass(frozen=True)
class CantorSpace:
    """Middle-thirds Cantor set on [lo, hi], refinable down to ``cap`` levels."""

    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(1)
    cap: int = CANTOR_LEVEL_CAP

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if not self.lo < self.hi:
            raise ValueError("degenerate ambient interval")

    @property
    def root(self) -> "Box":
        return Box(self.lo, self.hi, 0)


@dataclass(frozen=True, order=True)
class Box:
    """Cantor interval [lo, hi] at refinement level ``level``."""

    lo: Fraction
    hi: Fraction
    level: int

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def centre(self) -> float:
        return float((self.lo + self.hi) / 2)

    def refine(self, r: int) -> list["Box"]:
        w = self.width / 3**r
        return [Box(self.lo + n * w, self.lo + (n + 1) * w, self.level + r) for n in _cantor_numerators(r)]

    def to_json(self) -> list[float]:
        return [float(self.lo), float(self.hi)]


@dataclass
class TreeNode:
    address: str
    box: Box
    certificate: str | None = None  # "connected" on certified splits, "leaf" at full depth
    margin: float | None = None
    index: int | None = None
    children: tuple[str, str] | None = None

    def to_json(self) -> dict:
        return {
            "address": self.address,
            "interval": self.box.to_json(),
            "depth": len(self.address),
            "certificate": self.certificate,
            "margin": self.margin,
            "index": self.index,
        }


@dataclass
class ColoringTree:
    depth: int
    nodes: dict[str, TreeNode] = field(default_factory=dict)

    def leaves(self) -> list[TreeNode]:
        return [n for a, n in sorted(self.nodes.items()) if len(a) == self.depth]

    def max_diam_ratio(self) -> float:
        """max over nodes of diam(P_s) * 2^|s| (must be <= 1)."""
        return max(float(n.box.width) * 2 ** len(a) for a, n in self.nodes.items())

    def children_disjoint(self) -> bool:
        for n in self.nodes.values():
            if n.children:
                b0, b1 = (self.nodes[c].box for c in n.children)
                if not (n.box.lo <= b0.lo and b0.hi < b1.lo and b1.hi <= n.box.hi):
                    return False
        return True

    def to_json(self) -> dict:
        return {"depth": self.depth, "nodes": [n.to_json() for _, n in sorted(self.nodes.items())]}


@dataclass
class FreeSetReport:
    """No certified split was found below ``node``: a candidate W-free region."""

    node: TreeNode
    probe_depth: int
    failed_probes: list[tuple[list[float], list[float], float | None]]
    partial: ColoringTree

    def to_json(self) -> dict:
        return {
            "free_candidate": self.node.to_json(),
            "probe_depth": self.probe_depth,
            "failed_probes": [{"I": i, "J": j, "best_margin": m} for i, j, m in self.failed_probes],
            "partial_tree": self.partial.to_json(),
        }


Certifier = Callable[[Box, Box, int | None], tuple[bool, float | None, int | None]]


def _certify_with(colorings: Sequence[PairColoring], strict_cover: bool) -> Certifier:
    """Certify I x J inside some W_i; preference goes to the parent's index, then the lowest."""

    def probe(x: float, y: float, order: list[int]) -> tuple[int | None, float | None]:
        answers = [(i, colorings[i].checked_query(x, y)) for i in order]
        hits = [(i, a.margin) for i, a in answers if isinstance(a, InW)]
        if strict_cover and not hits:
            raise ValueError(f"pair ({x!r}, {y!r}) is covered by none of the {len(colorings)} colorings")
        return hits[0] if hits else (None, None)

    def certify(I: Box, J: Box, parent_index: int | None) -> tuple[bool, float | None, int | None]:
        order = list(range(len(colorings)))
        if parent_index is not None:
            order.remove(parent_index)
            order.insert(0, parent_index)
        # pass 1: one query at the centre pair
        need = float(max(I.width, J.width)) / 2
        best = None
        for i in order:
            a = colorings[i].checked_query(I.centre, J.centre)
            if isinstance(a, InW):
                best = a.margin if best is None else max(best, a.margin)
                if a.margin > need:
                    return True, a.margin, i
        if strict_cover and best is None:
            probe(I.centre, J.centre, order)
        # pass 2: one extra level, each of the four sub-pairs certified by a common index
        subs = [(A, B) for A in I.refine(1) for B in J.refine(1)]
        need = float(max(I.width, J.width)) / 6
        for i in order:
            margins = []
            for A, B in subs:
                a = colorings[i].checked_query(A.centre, B.centre)
                if not (isinstance(a, InW) and a.margin > need):
                    break
                margins.append(a.margin)
            else:
                return True, min(margins), i
        return False, best, None

    return certify


def _build(E: CantorSpace, certify: Certifier, depth: int) -> ColoringTree | FreeSetReport:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    tree = ColoringTree(depth)
    tree.nodes[""] = TreeNode("", E.root)
    if float(E.root.width) > 1:
        raise ValueError("ambient interval longer than 1 violates diam(P_root) <= 1")
    stack = [""]
    while stack:
        addr = stack.pop()
        node = tree.nodes[addr]
        if len(addr) == depth:
            node.certificate = "leaf"
            continue
        target = Fraction(1, 2 ** (len(addr) + 1))
        parent_index = tree.nodes[addr[:-1]].index if addr else None
        failed: list[tuple[list[float], list[float], float | None]] = []
        found = None
        r = 0
        while found is None and len(failed) < PROBE_BUDGET:
            r += 1
            if node.box.level + r + 1 > E.cap:
                if r == 1:
                    raise ValueError(f"depth {depth} exceeds the refinement cap {E.cap} at node '{addr}'")
                break
            subs = node.box.refine(r)
            if subs[0].width > target:
                continue
            for a in range(len(subs)):
                for b in range(a + 1, len(subs)):
                    if len(failed) >= PROBE_BUDGET:
                        break
                    ok, margin, index = certify(subs[a], subs[b], parent_index)
                    if ok:
                        found = (subs[a], subs[b], margin, index)
                        break
                    failed.append((subs[a].to_json(), subs[b].to_json(), margin))
                if found or len(failed) >= PROBE_BUDGET:
                    break
        if found is None:
            return FreeSetReport(node, node.box.level + r, failed, tree)
        I, J, margin, index = found
        node.certificate, node.margin, node.index = "connected", margin, index
        node.children = (addr + "0", addr + "1")
        tree.nodes[addr + "0"] = TreeNode(addr + "0", I)
        tree.nodes[addr + "1"] = TreeNode(addr + "1", J)
        stack += [addr + "1", addr + "0"]
    return tree


def soca_dichotomy(E: CantorSpace, W: PairColoring, depth: int) -> ColoringTree | FreeSetReport:
    """A depth-``depth`` W-connected tree, or the first node where no split could be certified."""
    return _build(E, _certify_with([W], strict_cover=False), depth)


def cover_refine(E: CantorSpace, covers: Sequence[PairColoring], depth: int) -> ColoringTree | FreeSetReport:
    """Tree whose every split is certified by one of the covers, recording which."""
    if not covers:
        raise ValueError("need at least one coloring")
    return _build(E, _certify_with(list(covers), strict_cover=True), depth)


def verify_connected(tree: ColoringTree, W: PairColoring | Sequence[PairColoring]) -> list[tuple[float, float]]:
    """Re-probe every split: all leaf representatives under s0 against those under s1.

    Returns the pairs that are not InW for the recorded coloring (empty when the
    tree checks out).
    """
    covers = [W] if isinstance(W, PairColoring) else list(W)
    bad = []
    leaves = tree.leaves()
    for addr, node in tree.nodes.items():
        if not node.children:
            continue
        c = covers[node.index or 0]
        left = [float(l.box.lo) for l in leaves if l.address.startswith(addr + "0")]
        right = [float(l.box.lo) for l in leaves if l.address.startswith(addr + "1")]
        for x in left:
            for y in right:
                if not isinstance(c.checked_query(x, y), InW):
                    bad.append((x, y))
    return bad


# --- diagonal extension ----------------------------------------------------------

PairFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
SAMPLE_LEVELS = 3
MAX_OFFSET = 12


@dataclass
class DiagNode:
    address: str  # root index then binary path, e.g. "3:010"
    lo: float
    hi: float
    depth: int
    box_lo: np.ndarray | None
    box_hi: np.ndarray | None

    @property
    def diam(self) -> float:
        if self.box_lo is None:
            return 0.0
        return float(np.max(self.box_hi - self.box_lo))

    @property
    def centre(self) -> np.ndarray:
        return (self.box_lo + self.box_hi) / 2


@dataclass
class DiagonalExtension:
    """Nested image boxes H^n over a forest of Cantor (or cluster) intervals."""

    depth: int
    offset: int
    mesh: float
    nodes: dict[str, DiagNode]
    leaf_points: np.ndarray
    leaf_values: np.ndarray
    modulus: list[tuple[float, float]]

    def value(self, x: float) -> np.ndarray:
        """ĝ(x, x): centre of the deepest nonempty image box over x."""
        best = None
        for n in self.nodes.values():
            if n.box_lo is not None and n.lo <= x <= n.hi and (best is None or n.depth > best.depth):
                best = n
        if best is None:
            raise ValueError(f"{x} lies outside the tree")
        return best.centre

    def nested_ok(self) -> bool:
        for addr, n in self.nodes.items():
            parent = addr[:-1] if not addr.endswith(":") else None
            if parent is None or parent not in self.nodes or n.box_lo is None:
                continue
            p = self.nodes[parent]
            if np.any(n.box_lo < p.box_lo) or np.any(n.box_hi > p.box_hi):
                return False
            if n.diam > 2.0**-n.depth * (1 + 1e-12):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "offset": self.offset,
            "mesh": self.mesh,
            "leaves": [[float(x), *map(float, np.atleast_1d(v))] for x, v in zip(self.leaf_points, self.leaf_values)],
            "modulus": [[d, w] for d, w in self.modulus],
        }


def _vector_g(g: Callable) -> PairFn:
    def f(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        v = np.asarray(g(x, y), dtype=float)
        return v.reshape(x.shape + (-1,)) if v.ndim == x.ndim else v

    return f


def _box(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return values.min(axis=0), values.max(axis=0)


def _modulus(xs: np.ndarray, vals: np.ndarray) -> list[tuple[float, float]]:
    out = []
    span = float(xs[-1] - xs[0]) if len(xs) > 1 else 0.0
    for k in range(1, 9):
        d = span * 2.0**-k
        if d == 0.0:
            break
        near = np.abs(xs[:, None] - xs[None, :]) <= d
        diff = np.max(np.abs(vals[:, None, :] - vals[None, :, :]), axis=2)
        out.append((d, float(np.max(np.where(near, diff, 0.0)))))
    return out


def _cantor_forest(E: CantorSpace, offset: int, depth: int, g: PairFn, lipschitz: float):
    nodes: dict[str, DiagNode] = {}
    mesh = 0.0
    for ri, root in enumerate(E.root.refine(offset)):
        stack: list[tuple[str, Box, DiagNode | None]] = [(f"{ri}:", root, None)]
        while stack:
            addr, box, parent = stack.pop()
            k = len(addr.split(":")[1])
            if box.level + SAMPLE_LEVELS > E.cap:
                raise ValueError(f"node {addr} needs refinement beyond the cap {E.cap}")
            subs = box.refine(SAMPLE_LEVELS)
            pts = np.array(sorted({float(b.lo) for b in subs} | {float(b.hi) for b in subs}))
            h = float(subs[0].width) / 2
            mesh = max(mesh, h)
            i, j = np.triu_indices(len(pts), k=1)
            vals = g(pts[i], pts[j])
            lo, hi = _box(vals)
            lo, hi = lo - lipschitz * h, hi + lipschitz * h
            if parent is not None:
                lo, hi = np.maximum(lo, parent.box_lo), np.minimum(hi, parent.box_hi)
            node = DiagNode(addr, float(box.lo), float(box.hi), k, lo, hi)
            if node.diam > 2.0**-k:
                return None, node, mesh
            nodes[addr] = node
            if k < depth:
                b0, b1 = box.refine(1)
                stack += [(addr + "1", b1, node), (addr + "0", b0, node)]
    return nodes, None, mesh


def _clusters(xs: np.ndarray) -> list[tuple[str, int, int]]:
    """Binary hierarchy of index ranges [i, j) of sorted points, split at the largest gap."""
    out = []
    stack = [("", 0, len(xs))]
    while stack:
        addr, i, j = stack.pop()
        out.append((addr, i, j))
        if j - i >= 2:
            d = np.diff(xs[i:j])
            # among (near-)largest gaps prefer the most central one
            tied = np.nonzero(d >= d.max() * (1 - 1e-9))[0]
            k = i + 1 + int(tied[np.argmin(np.abs(tied - (len(d) - 1) / 2))])
            stack += [(addr + "1", k, j), (addr + "0", i, k)]
    return out


def _finite_forest(xs: np.ndarray, offset: int, depth: int, g: PairFn):
    nodes: dict[str, DiagNode] = {}
    tree = _clusters(xs)
    span = {addr: (i, j) for addr, i, j in tree}

    def data_box(i: int, j: int):
        a, b = np.triu_indices(j - i, k=1)
        return _box(g(xs[i:j][a], xs[i:j][b]))

    roots = [c for c in tree if len(c[0]) == offset] + [c for c in tree if len(c[0]) < offset and c[2] - c[1] == 1]
    for ri, (raddr, i0, j0) in enumerate(sorted(roots, key=lambda c: c[1])):
        for addr, i, j in tree:
            if not addr.startswith(raddr) or len(addr) - len(raddr) > depth:
                continue
            k = len(addr) - len(raddr)
            key = f"{ri}:{addr[len(raddr):]}"
            parent = nodes.get(key[:-1]) if k else None
            if j - i < 2:
                # an isolated point takes the centre of the nearest enclosing box
                if parent is not None:
                    c = parent.centre
                else:
                    lo, hi = data_box(*span[addr[:-1]])
                    c = (lo + hi) / 2
                nodes[key] = DiagNode(key, float(xs[i]), float(xs[j - 1]), k, c.copy(), c.copy())
                continue
            lo, hi = data_box(i, j)
            if parent is not None and parent.box_lo is not None:
                lo, hi = np.maximum(lo, parent.box_lo), np.minimum(hi, parent.box_hi)
            node = DiagNode(key, float(xs[i]), float(xs[j - 1]), k, lo, hi)
            if node.diam > 2.0**-k:
                return None, node
            nodes[key] = node
    return nodes, None


def diagonal_extend(
    g: Callable,
    E: CantorSpace | Sequence[Real],
    depth: int,
    lipschitz: float | None = None,
) -> DiagonalExtension:
    """Continuous diagonal values ĝ(x, x) for a symmetric pair function g.

    ``E`` is either a CantorSpace (image boxes from sampled cross pairs,
    inflated by ``lipschitz`` times the sample mesh) or a finite list of points
    (image boxes exact over the data pairs, split at the largest gaps).  The
    forest starts ``offset`` levels down, the first level at which every node
    at tree depth k has image diameter <= 2^-k.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    gv = _vector_g(g)
    last = None
    if isinstance(E, CantorSpace):
        if lipschitz is None:
            lipschitz = _estimate_lipschitz(gv, E)
        for offset in range(MAX_OFFSET + 1):
            nodes, bad, mesh = _cantor_forest(E, offset, depth, gv, lipschitz)
            if nodes is not None:
                break
            last = bad
        else:
            raise ValueError(f"image diameter target unachievable; node {last.address} has diam {last.diam:.3g}")
    else:
        xs = np.array(sorted(float(x) for x in E))
        if len(xs) < 2 or np.any(np.diff(xs) <= 0):
            raise ValueError("need at least two distinct points")
        mesh = 0.0
        for offset in range(len(xs)):
            nodes, bad = _finite_forest(xs, offset, depth, gv)
            if nodes is not None:
                break
            last = bad
        else:
            raise ValueError(f"image diameter target unachievable; node {last.address} has diam {last.diam:.3g}")
    ext = DiagonalExtension(depth, offset, mesh, nodes, np.empty(0), np.empty(0), [])
    if isinstance(E, CantorSpace):
        xs = np.array(sorted({v for n in nodes.values() if n.depth == depth for v in (n.lo, n.hi)}))
    vals = np.array([ext.value(x) for x in xs])
    ext.leaf_points, ext.leaf_values = xs, vals
    ext.modulus = _modulus(xs, vals)
    return ext


def _estimate_lipschitz(g: PairFn, E: CantorSpace) -> float:
    """Twice the largest sampled rate of change of g on a grid of off-diagonal pairs."""
    pts = np.array(sorted({float(b.lo) for b in E.root.refine(6)}))
    i, j = np.triu_indices(len(pts), k=1)
    keep = j - i > 1
    i, j = i[keep], j[keep]
    v = g(pts[i], pts[j])
    v2 = g(pts[i + 1], pts[j])
    rate = np.max(np.abs(v2 - v), axis=-1) / (pts[i + 1] - pts[i])
    return 2.0 * float(np.max(rate))
