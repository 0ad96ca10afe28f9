"""Smooth extensions, bump and step functions, coloring trees, planar predicates and the
arc constructions built from them."""

from .constructions import build_vanishing_derivative_f, c1_arc_through, c2_avoider, star_divergence_test
from .geometry import PointSet, epsilon_directed, nonsquiggly_check
from .hermite import c1_extend, hermite_cubic
from .realsets import ClosedSet, cantor_points, gaps, make_cantor
from .smoothtools import bump_complement, smooth_step

__all__ = [
    "ClosedSet",
    "PointSet",
    "build_vanishing_derivative_f",
    "bump_complement",
    "c1_arc_through",
    "c1_extend",
    "c2_avoider",
    "cantor_points",
    "epsilon_directed",
    "gaps",
    "hermite_cubic",
    "make_cantor",
    "nonsquiggly_check",
    "smooth_step",
    "star_divergence_test",
]
