"""Closed subsets of the real line at finite resolution.

A :class:`ClosedSet` is a finite, ordered union of disjoint closed intervals
(degenerate intervals are single points).  Endpoints are stored as
:class:`fractions.Fraction` so that gap decomposition and membership are
bit-exact; floats passed in are converted exactly.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

Real = Union[int, float, Fraction]

CANTOR_LEVEL_CAP = 20


def as_fraction(x: Real | str) -> Fraction:
    """Exact rational for an int, float, Fraction or ``"p/q"`` string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not reals")
    if isinstance(x, np.generic):
        x = x.item()  # numpy integers would overflow inside Fraction arithmetic
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r}")
    return Fraction(x)


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class ClosedSet:
    """Finite union of pairwise disjoint closed intervals, strictly increasing."""

    pieces: tuple[tuple[Fraction, Fraction], ...]
    _lefts: list[Fraction] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pieces = tuple((as_fraction(l), as_fraction(r)) for l, r in self.pieces)
        for l, r in pieces:
            if l > r:
                raise ValueError(f"piece [{l}, {r}] has l > r")
        for (_, r0), (l1, _) in zip(pieces, pieces[1:]):
            if not r0 < l1:
                raise ValueError(f"pieces must be disjoint and increasing (got {r0} >= {l1})")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_lefts", [l for l, _ in pieces])

    @classmethod
    def from_intervals(cls, intervals: Iterable[Sequence[Real | str]]) -> "ClosedSet":
        return cls(tuple((as_fraction(l), as_fraction(r)) for l, r in intervals))

    @classmethod
    def from_points(cls, points: Iterable[Real | str]) -> "ClosedSet":
        pts = sorted({as_fraction(p) for p in points})
        return cls(tuple((p, p) for p in pts))

    def __len__(self) -> int:
        return len(self.pieces)

    def __iter__(self) -> Iterator[tuple[Fraction, Fraction]]:
        return iter(self.pieces)

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def is_discrete(self) -> bool:
        """True when every piece is a single point."""
        return all(l == r for l, r in self.pieces)

    @property
    def hull(self) -> tuple[Fraction, Fraction]:
        if not self.pieces:
            raise ValueError("empty set has no hull")
        return self.pieces[0][0], self.pieces[-1][1]

    def endpoints(self) -> list[Fraction]:
        """Distinct piece endpoints in increasing order."""
        out: list[Fraction] = []
        for l, r in self.pieces:
            out.append(l)
            if r != l:
                out.append(r)
        return out

    def contains(self, x: Real) -> bool:
        return contains(self, x)

    def piece_index(self, x: Real) -> int | None:
        """Index of the piece containing ``x``, or None."""
        i = bisect.bisect_right(self._lefts, x) - 1
        if i >= 0 and x <= self.pieces[i][1]:
            return i
        return None

    def to_json(self) -> dict:
        return {"pieces": [[format_fraction(l), format_fraction(r)] for l, r in self.pieces]}

    @classmethod
    def from_json(cls, data: dict) -> "ClosedSet":
        return cls.from_intervals(data["pieces"])


@dataclass(frozen=True)
class GapList:
    """Open intervals making up the complement of a ClosedSet in its ambient."""

    bounded: tuple[tuple[Fraction, Fraction], ...]
    left_ray: Fraction | None = None  # the ray (-inf, left_ray)
    right_ray: Fraction | None = None  # the ray (right_ray, +inf)

    def __len__(self) -> int:
        return len(self.bounded)

    def locate(self, x: Real) -> int | None:
        """Index of the bounded gap containing ``x`` (open interval), or None."""
        lefts = [a for a, _ in self.bounded]
        i = bisect.bisect_right(lefts, x) - 1
        if i >= 0 and self.bounded[i][0] < x < self.bounded[i][1]:
            return i
        return None


def _check_ambient(ambient: Sequence[Real]) -> tuple[Fraction, Fraction]:
    lo, hi = (as_fraction(v) for v in ambient)
    if not lo < hi:
        raise ValueError(f"ambient interval [{lo}, {hi}] is degenerate")
    return lo, hi


def cantor_addresses(level: int) -> list[tuple[int, ...]]:
    """Ternary addresses in {0, 2}^level, in increasing (lexicographic) order."""
    if level < 0:
        raise ValueError("level must be >= 0")
    return list(itertools.product((0, 2), repeat=level))


def _cantor_numerators(level: int) -> list[int]:
    ns = [0]
    for _ in range(level):
        ns = [m for n in ns for m in (3 * n, 3 * n + 2)]
    return ns


def make_cantor(level: int, ambient: Sequence[Real] = (0, 1), cap: int = CANTOR_LEVEL_CAP) -> ClosedSet:
    """Level-``level`` middle-thirds approximation: 2**level intervals of length |ambient| 3**-level."""
    if level < 0:
        raise ValueError(f"negative level {level}")
    if level > cap:
        raise ValueError(f"level {level} exceeds cap {cap}")
    lo, hi = _check_ambient(ambient)
    scale = (hi - lo) / 3**level
    return ClosedSet(tuple((lo + n * scale, lo + (n + 1) * scale) for n in _cantor_numerators(level)))


def cantor_points(level: int, ambient: Sequence[Real] = (0, 1), cap: int = CANTOR_LEVEL_CAP) -> ClosedSet:
    """Left endpoints t_a = sum a_i 3**-i of the level-``level`` pieces, as a discrete set."""
    pieces = make_cantor(level, ambient, cap)
    return ClosedSet(tuple((l, l) for l, _ in pieces))


def gaps(D: ClosedSet, ambient: Sequence[Real] | None = None) -> GapList:
    """Gap decomposition of ``D``.

    With ``ambient=None`` the ambient is the whole line and the two unbounded
    rays are reported.  With a bounded ambient interval containing ``D`` the
    stretches between the ambient ends and ``D`` are reported as bounded gaps.
    """
    if D.is_empty:
        raise ValueError("gaps of an empty set")
    bounded = [(r0, l1) for (_, r0), (l1, _) in zip(D.pieces, D.pieces[1:])]
    lo_d, hi_d = D.hull
    if ambient is None:
        return GapList(tuple(bounded), left_ray=lo_d, right_ray=hi_d)
    lo, hi = _check_ambient(ambient)
    if lo > lo_d or hi < hi_d:
        raise ValueError(f"set hull [{lo_d}, {hi_d}] not inside ambient [{lo}, {hi}]")
    if lo < lo_d:
        bounded.insert(0, (lo, lo_d))
    if hi_d < hi:
        bounded.append((hi_d, hi))
    return GapList(tuple(bounded))


def contains(D: ClosedSet, x: Real) -> bool:
    """Membership by binary search over the ordered pieces."""
    if isinstance(x, float) and not math.isfinite(x):
        return False
    return D.piece_index(x) is not None
