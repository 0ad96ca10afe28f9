"""Command-line front end.  Exit codes: 0 ok, 1 verification failure, 2 usage error."""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import io as aio

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any]
    out: Path
    fmt: str = "csv"
    seed: int = 0
    inputs: list[Path] = field(default_factory=list)


@dataclass
class Outcome:
    ok: bool
    report: dict
    tables: dict[str, tuple[list[str], list[Sequence[Any]]]] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)


def _ranged(kind: type, lo: float, hi: float) -> Callable[[str], Any]:
    def parse(text: str):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}")
        if not lo <= v <= hi:
            raise argparse.ArgumentTypeError(f"{v} outside [{lo}, {hi}]")
        return v

    return parse


def _read_points(path: Path) -> list[tuple[Fraction, ...]]:
    """CSV of coordinates (a non-numeric first row is taken as a header)."""
    rows = []
    with open(path, newline="") as fh:
        for k, r in enumerate(csv.reader(fh)):
            if not r:
                continue
            try:
                rows.append(tuple(Fraction(c.strip()) for c in r))
            except ValueError:
                if k == 0:
                    continue
                raise UsageError(f"{path}: row {k + 1} is not numeric")
    if not rows:
        raise UsageError(f"{path}: no points")
    return rows


# --- commands -------------------------------------------------------------------


def cmd_cantor(cfg: RunConfig) -> Outcome:
    from .realsets import gaps, make_cantor

    p = cfg.params
    D = make_cantor(p["level"], (p["lo"], p["hi"]))
    G = gaps(D, (p["lo"], p["hi"]))
    return Outcome(
        True,
        {"paper_ref": "middle-thirds Cantor set", "pieces": len(D), "set": D.to_json()},
        {"gaps": (["a", "b"], [(float(a), float(b)) for a, b in G.bounded])},
    )


def cmd_hermite(cfg: RunConfig) -> Outcome:
    from .hermite import c1_extend, verify_hermite_bounds
    from .realsets import make_cantor

    p = cfg.params
    D = make_cantor(p["level"])
    if p["demo"] == "identity":
        F = c1_extend(D, lambda x: x, lambda x: 1)
        ref = lambda x: x
    else:
        F = c1_extend(D, lambda x: x * x, lambda x: 2 * x)
        ref = lambda x: x * x
    reps = [verify_hermite_bounds(s, p["grid"]) for s in F.segments]
    worst = {
        "slope": max((r.max_slope_dev for r in reps), default=0.0),
        "value": max((r.max_value_dev for r in reps), default=0.0),
        "secant": max((r.max_secant_dev for r in reps), default=0.0),
    }
    exact = all(F.value(x) == ref(x) for x in D.endpoints())
    ok = exact and all(r.within() for r in reps)
    xs = np.linspace(0, 1, p["samples"])
    return Outcome(
        ok,
        {"paper_ref": "C1 extension by bounded Hermite cubics", "demo": p["demo"], "interpolates": exact, "max_deviation": worst},
        {"extension": (["x", "f", "h"], F.table(xs))},
    )


def cmd_bump(cfg: RunConfig) -> Outcome:
    from .realsets import make_cantor
    from .smoothtools import bump_complement

    p = cfg.params
    D = make_cantor(p["level"])
    B = bump_complement(D, (0, 1), p["k_max"])
    h = B.as_smooth()
    ends = np.array([float(x) for x in D.endpoints()])
    mids = np.array([(a + b) / 2 for a, b in B.intervals])
    zero = bool(np.all(h(ends) == 0))
    pos = bool(np.all(h(mids) > 0))
    xs = np.linspace(0, 1, p["samples"])
    cols = [h.derivative(xs, k) for k in range(p["k_max"] + 1)]
    return Outcome(
        zero and pos,
        {"paper_ref": "smooth function vanishing exactly on a closed set", "gaps": len(B.intervals), "zero_on_D": zero, "positive_in_gaps": pos, "weights": list(B.weights)},
        {"bump": (["x"] + [f"h{k}" for k in range(p["k_max"] + 1)], list(zip(xs, *cols)))},
    )


def cmd_step(cfg: RunConfig) -> Outcome:
    from .smoothtools import smooth_step, step_normalizer

    p = cfg.params
    psi = smooth_step(p["k_max"])
    ts = np.linspace(0, 1, p["samples"])
    cols = [psi.derivative(ts, k) for k in range(p["k_max"] + 1)]
    sym = float(np.max(np.abs(psi(ts) + psi(1 - ts) - 1)))
    ok = float(psi(0.0)) == 0 and float(psi(1.0)) == 1 and sym < 1e-12
    return Outcome(
        ok,
        {"paper_ref": "smooth step interpolation function", "normalizer": step_normalizer(), "sup": list(psi.sup), "symmetry_error": sym},
        {"step": (["t"] + [f"psi{k}" for k in range(p["k_max"] + 1)], list(zip(ts, *cols)))},
    )


def cmd_soca(cfg: RunConfig) -> Outcome:
    from .coloring import CantorSpace, ColoringTree, separated, soca_dichotomy, verify_connected

    p = cfg.params
    W = separated(p["threshold"])
    res = soca_dichotomy(CantorSpace(0, 1), W, p["depth"])
    report: dict = {"paper_ref": "open coloring dichotomy on a Cantor set", "threshold": p["threshold"], "depth": p["depth"]}
    if isinstance(res, ColoringTree):
        bad = verify_connected(res, W)
        report.update(outcome="connected_tree", bad_pairs=len(bad), tree=res.to_json())
        return Outcome(not bad, report)
    report.update(outcome="free_region", **res.to_json())
    return Outcome(True, report, lines=[f"no certified split below node {res.node.address!r}"])


def cmd_directed(cfg: RunConfig) -> Outcome:
    from .geometry import epsilon_directed

    p = cfg.params
    if cfg.inputs:
        pts = _read_points(cfg.inputs[0])
    else:
        rng = np.random.default_rng(cfg.seed)
        pts = rng.uniform(-1, 1, (p["count"], p["dim"]))
    v = epsilon_directed(pts, p["eps"])
    return Outcome(True, {"paper_ref": "epsilon-directed sets", **v.to_json()})


def cmd_squiggle(cfg: RunConfig) -> Outcome:
    from .constructions import squiggle_witness_demo
    from .geometry import extract_nonsquiggly, nonsquiggly_check

    p = cfg.params
    if cfg.inputs:
        pts = _read_points(cfg.inputs[0])
        v = nonsquiggly_check(pts, p["delta"])
        report = {"paper_ref": "non-squiggly sets", "verdict": v.to_json()}
        tables = {}
        if p["extract"]:
            sub = extract_nonsquiggly(pts, p["delta"])
            tables["subset"] = ([f"x{i}" for i in range(sub.dim)], sub.array().tolist())
        return Outcome(True, report, tables)
    d = squiggle_witness_demo(p["level"])
    return Outcome(True, {"paper_ref": "squiggle witness on the graph of f", **d.to_json()}, lines=[d.note] if d.note else [])


def cmd_c2avoid(cfg: RunConfig) -> Outcome:
    from .constructions import c2_avoider, taylor_contradiction_scan
    from .geometry import nonsquiggly_check

    p = cfg.params
    c = c2_avoider(p["level"], samples=p["samples"], power=p["power"])
    v = nonsquiggly_check(c.P)
    scan = taylor_contradiction_scan(c)
    report = {
        "paper_ref": "convex perfect set avoiding C2 arcs",
        "level": p["level"],
        "power": p["power"],
        "points": len(c.P),
        "nonsquiggly": v.nonsquiggly,
        "verdict": v.to_json(),
        "taylor_scan": scan.to_json(),
        "K": [str(k) for k in c.K],
        "psi_K": [str(k) for k in c.psi_K],
    }
    tables = {
        "P": (["x", "y"], [(float(x), float(y)) for x, y in zip(c.K, c.psi_K)]),
        "psi": (["y", "psi", "phi"], c.psi_table.tolist()),
    }
    return Outcome(v.nonsquiggly and scan.all_above_threshold, report, tables)


def cmd_star(cfg: RunConfig) -> Outcome:
    from .constructions import c2_avoider, square_comparison, star_divergence_test

    p = cfg.params
    ts = p["t"]
    c = c2_avoider(p["level"], samples=2)
    idx = np.round(np.linspace(0, len(c.K) - 1, min(p["points"], len(c.K)))).astype(int)
    tables, rows, ok = [], [], True
    for i in idx:
        st = star_divergence_test(c, c.K[i], ts)
        tables.append(st.to_json())
        rows += [(float(st.x), t, q) for t, q in zip(st.t, st.Q)]
        ok &= st.increasing_tail and st.Q[-1] > p["threshold"]
    ctl = star_divergence_test(square_comparison(), 0.3, ts)
    report = {"paper_ref": "divergence of the second difference quotient", "threshold": p["threshold"], "tables": tables, "control": ctl.to_json()}
    return Outcome(ok, report, {"star": (["x", "t", "Q"], rows)})


def cmd_c1arc(cfg: RunConfig) -> Outcome:
    from .constructions import c1_arc_through
    from .realsets import make_cantor

    p = cfg.params
    if cfg.inputs:
        pts = _read_points(cfg.inputs[0])
    else:
        xs = make_cantor(p["level"], (0, Fraction(2, 5))).endpoints()
        pts = [(x, x * x) for x in xs]
    arc = c1_arc_through(pts, p["depth"])
    lo, hi = float(arc.xs[0]), float(arc.xs[-1])
    us = np.linspace(lo, hi, p["samples"])
    curve = [arc(u) for u in us]
    ok = arc.max_interp_error <= 1e-9
    dim = len(curve[0])
    return Outcome(
        ok,
        {"paper_ref": "C1 arc through a directed set", **arc.to_json()},
        {"arc": ([f"x{i}" for i in range(dim)], [list(c) for c in curve])},
    )


def cmd_flat(cfg: RunConfig) -> Outcome:
    from .flatinterp import flat_bound, polygonal_arc_data, psi_interpolate, reference_sequence, verify_flat_bounds

    p = cfg.params
    arc = polygonal_arc_data(reference_sequence(p["J"]), p["alpha_max"])
    path = psi_interpolate(arc.data)
    rep = verify_flat_bounds(path, k_max=p["k_max"], samples=p["samples"], seed=cfg.seed)
    within = arc.data.flatness.within([flat_bound(a) for a in range(p["alpha_max"] + 1)])
    tab = path.table(p["samples"])
    return Outcome(
        rep.passed and within,
        {"paper_ref": "smooth path through a convergent sequence", "M": list(arc.data.M), "within_bound": within, "bounds": rep.to_json()},
        {"path": (["t"] + [f"g{i}" for i in range(tab.shape[1] - 1)], tab.tolist())},
    )


def cmd_verify_all(cfg: RunConfig) -> Outcome:
    from .verify import run_all

    results = run_all(cfg.seed)
    ok = all(r.passed for r in results)
    return Outcome(
        ok,
        {"paper_ref": "acceptance suite", "passed": ok, "criteria": [r.to_json() for r in results]},
        {"timing": (["criterion", "name", "seconds", "budget"], [(r.number, r.name, r.seconds, float(r.budget)) for r in results])},
        lines=[r.line() for r in results],
    )


COMMANDS: dict[str, Callable[[RunConfig], Outcome]] = {
    "cantor": cmd_cantor,
    "hermite-extend": cmd_hermite,
    "bump": cmd_bump,
    "step": cmd_step,
    "soca": cmd_soca,
    "directed": cmd_directed,
    "squiggle": cmd_squiggle,
    "c2avoid": cmd_c2avoid,
    "star-test": cmd_star,
    "c1-arc": cmd_c1arc,
    "flat-interp": cmd_flat,
    "verify-all": cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${aio.OUT_ENV} or ./smootharcs_out)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="format of table artifacts")
    common.add_argument("--seed", type=_ranged(int, 0, 2**32 - 1), default=0, help="seed for randomised checks")

    ap = argparse.ArgumentParser(prog="smootharcs", description="Constructions of smooth arcs and their verification.")
    sub = ap.add_subparsers(dest="command", required=True)
    level = _ranged(int, 0, 12)

    s = sub.add_parser("cantor", parents=[common], help="middle-thirds Cantor set")
    s.add_argument("--level", type=level, default=3)
    s.add_argument("--lo", type=Fraction, default=Fraction(0))
    s.add_argument("--hi", type=Fraction, default=Fraction(1))

    s = sub.add_parser("hermite-extend", parents=[common], help="C1 extension from a Cantor set")
    s.add_argument("--demo", choices=("identity", "square"), default="square")
    s.add_argument("--level", type=level, default=4)
    s.add_argument("--grid", type=_ranged(int, 2, 1 << 16), default=1024)
    s.add_argument("--samples", type=_ranged(int, 2, 10**6), default=1001)

    s = sub.add_parser("bump", parents=[common], help="smooth function vanishing on a Cantor set")
    s.add_argument("--level", type=level, default=4)
    s.add_argument("--k-max", type=_ranged(int, 0, 20), default=4)
    s.add_argument("--samples", type=_ranged(int, 2, 10**6), default=1001)

    s = sub.add_parser("step", parents=[common], help="smooth step function table")
    s.add_argument("--k-max", type=_ranged(int, 0, 20), default=3)
    s.add_argument("--samples", type=_ranged(int, 2, 10**6), default=1001)

    s = sub.add_parser("soca", parents=[common], help="coloring tree for a distance coloring")
    s.add_argument("--depth", type=_ranged(int, 0, 12), default=3)
    s.add_argument("--threshold", type=_ranged(float, 0.0, 1.0), default=0.1)

    s = sub.add_parser("directed", parents=[common], help="epsilon-directedness of a point set")
    s.add_argument("--input", type=Path, help="CSV of points")
    s.add_argument("--eps", type=_ranged(float, 0.0, 2.0), default=2 ** 0.5)
    s.add_argument("--count", type=_ranged(int, 2, 10**5), default=10)
    s.add_argument("--dim", type=_ranged(int, 2, 64), default=2)

    s = sub.add_parser("squiggle", parents=[common], help="non-squiggly check or witness demo")
    s.add_argument("--input", type=Path, help="CSV of planar points")
    s.add_argument("--level", type=level, default=5)
    s.add_argument("--delta", type=_ranged(float, 0.0, float("inf")), default=float("inf"))
    s.add_argument("--extract", action="store_true", help="also extract a non-squiggly subset")

    s = sub.add_parser("c2avoid", parents=[common], help="convex set meeting no C2 arc in a perfect set")
    s.add_argument("--level", type=_ranged(int, 1, 8), default=5)
    s.add_argument("--samples", type=_ranged(int, 2, 10**6), default=2000)
    s.add_argument("--power", type=_ranged(int, 3, 12), default=7)

    s = sub.add_parser("star-test", parents=[common], help="second difference quotient along a t ladder")
    s.add_argument("--level", type=_ranged(int, 1, 8), default=5)
    s.add_argument("--points", type=_ranged(int, 1, 256), default=10)
    s.add_argument("--t", type=_ranged(float, 1e-8, 1.0), nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4])
    s.add_argument("--threshold", type=_ranged(float, 0.0, float("inf")), default=1e3)

    s = sub.add_parser("c1-arc", parents=[common], help="C1 arc through a directed sample")
    s.add_argument("--input", type=Path, help="CSV of points")
    s.add_argument("--level", type=level, default=4)
    s.add_argument("--depth", type=_ranged(int, 0, 12), default=6)
    s.add_argument("--samples", type=_ranged(int, 2, 10**6), default=1001)

    s = sub.add_parser("flat-interp", parents=[common], help="smooth path through a flat sequence")
    s.add_argument("--J", type=_ranged(int, 2, 9), default=6)
    s.add_argument("--alpha-max", type=_ranged(int, 0, 12), default=6)
    s.add_argument("--k-max", type=_ranged(int, 0, 3), default=3)
    s.add_argument("--samples", type=_ranged(int, 2, 10**5), default=1000)

    sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "out", "format", "seed", "input")}
    inputs = [ns.input] if getattr(ns, "input", None) else []
    return RunConfig(ns.command, params, aio.output_dir(ns.out), ns.format, ns.seed, inputs)


def run(cfg: RunConfig) -> int:
    try:
        outcome = COMMANDS[cfg.command](cfg)
    except (UsageError, ValueError, OSError) as exc:
        print(f"smootharcs {cfg.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"command": cfg.command, "ok": outcome.ok, **outcome.report}
    for name, (header, rows) in outcome.tables.items():
        if cfg.fmt == "csv":
            aio.write_csv(cfg.out / f"{name}.csv", header, rows)
        else:
            aio.write_json(cfg.out / f"{name}.json", {"columns": list(header), "rows": [list(r) for r in rows]})
    path = aio.write_json(cfg.out / "report.json", report)
    for line in outcome.lines:
        print(line)
    print(f"{cfg.command}: {'ok' if outcome.ok else 'verification failed'} ({path})")
    return EXIT_OK if outcome.ok else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
