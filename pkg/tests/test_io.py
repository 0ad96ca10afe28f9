from __future__ import annotations

import json
import os
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smootharcs import io as aio


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert float(aio.fmt_float(x)) == x


def test_special_floats_are_strings():
    doc = json.loads(aio.dumps({"a": float("inf"), "b": -np.inf, "c": float("nan")}))
    assert doc == {"a": "inf", "b": "-inf", "c": "nan"}


def test_dumps_handles_numpy_and_fractions():
    obj = {"n": np.int64(3), "ok": np.bool_(True), "v": np.array([0.1, 2.0]), "q": Fraction(1, 3), "e": []}
    doc = json.loads(aio.dumps(obj))
    assert doc == {"n": 3, "ok": True, "v": [0.1, 2.0], "q": "1/3", "e": []}
    assert "0.10000000000000001" in aio.dumps(0.1)


def test_dumps_is_deterministic():
    obj = {"x": [1.0 / 3, {"y": (2, 3)}], "z": "s"}
    assert aio.dumps(obj) == aio.dumps(json.loads(aio.dumps(obj)))


def test_dumps_rejects_unknown_types():
    with pytest.raises(TypeError):
        aio.dumps({"s": {1, 2}})


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "a.json"
    aio.write_json(p, {"v": 1})
    aio.write_json(p, {"v": 2})
    assert json.loads(p.read_text()) == {"v": 2}
    assert os.listdir(p.parent) == ["a.json"]


def test_csv_text():
    text = aio.csv_text(["a", "b"], [(1, 0.5), ("q", 1 / 3)])
    assert text == "a,b\n1,0.5\nq,0.33333333333333331\n"


def test_output_dir_precedence(monkeypatch):
    monkeypatch.setenv(aio.OUT_ENV, "/tmp/envdir")
    assert str(aio.output_dir("flag")) == "flag"
    assert str(aio.output_dir(None)) == "/tmp/envdir"
    monkeypatch.delenv(aio.OUT_ENV)
    assert str(aio.output_dir(None)) == "smootharcs_out"
