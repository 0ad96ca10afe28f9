"""Acceptance suite: one pass/fail line per criterion, printed with ``pytest -s``."""

from __future__ import annotations

import subprocess
import sys
import time

import pytest

from smootharcs import verify


def _check(result):
    print(result.line())
    assert result.passed, result.detail


def test_criterion_1_hermite_bounds():
    _check(verify.hermite_bounds(seed=0))


def test_criterion_2_c1_extension():
    _check(verify.c1_extension())


def test_criterion_3_bump_zero_set():
    _check(verify.bump_zero_set())


def test_criterion_4_quotient_divergence():
    _check(verify.quotient_divergence())


@pytest.mark.parametrize("which", [0, 1], ids=["convex", "graph"])
def test_criterion_5_squiggles(which):
    _check(verify.squiggle_checks()[which])


def test_criterion_6_coloring_tree():
    _check(verify.coloring_trees())


def test_criterion_7_c1_arc():
    _check(verify.c1_arc())


def test_criterion_8_flat_constants():
    _check(verify.flat_constants())


def test_criterion_9_direction_spread():
    _check(verify.directed_exactness(seed=0))


def test_criterion_10_verify_all(tmp_path):
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "smootharcs", "verify-all", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        timeout=300,
    )
    dt = time.perf_counter() - t0
    ok = proc.returncode == 0 and dt < 120
    print(f"[{'PASS' if ok else 'FAIL'}] criterion 10: verify-all exits 0 ({dt:.2f}s / 120s)")
    print("".join("    " + ln for ln in proc.stdout.splitlines(True)))
    assert (tmp_path / "report.json").exists()
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert dt < 120
