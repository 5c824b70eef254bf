import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkfol import io
from rkfol.stack import SCENARIO_R, SCENARIO_UPPER


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_floats(x):
    assert float(io.fmt(x)) == x


def test_fmt_specials():
    assert io.fmt(float("nan")) == "nan"
    assert io.fmt(float("inf")) == "inf"


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6))
def test_dumps_is_valid_json_and_exact(xs):
    obj = {"x": np.array(xs), "f": Fraction(1, 3), "n": np.int64(3), "nested": [{"a": xs[0]}]}
    back = json.loads(io.dumps(obj))
    assert back["x"] == xs and back["n"] == 3 and back["nested"][0]["a"] == xs[0]
    assert back["f"] == "1/3" or back["f"] == pytest.approx(1 / 3)


def test_dumps_deterministic():
    obj = {"b": [1.0, 2.5], "a": {"c": math.pi}}
    assert io.dumps(obj) == io.dumps(json.loads(io.dumps(obj)))


def test_csv_roundtrip_with_text_column(tmp_path):
    p = tmp_path / "t.csv"
    rows = [[0.1, 1 / 3, "direct"], [-2.0, 1e-300, "retrograde"]]
    io.write_csv(p, ["a", "b", "regime"], rows)
    raw = p.read_bytes()
    assert b"\r" not in raw
    header, data, text = io.read_csv(p)
    assert header == ["a", "b"]
    np.testing.assert_array_equal(data, [[0.1, 1 / 3], [-2.0, 1e-300]])
    assert text["regime"] == ["direct", "retrograde"]


def test_load_scenario_names_and_files(tmp_path):
    assert io.load_scenario(None)[0] == SCENARIO_R
    assert io.load_scenario("upper")[0] == SCENARIO_UPPER
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"base": "R", "Lambda3": 3.5, "seed": 7}))
    params, extra = io.load_scenario(f)
    assert params.lam3 == 3.5 and params.c == SCENARIO_R.c and extra == {"seed": 7}
    with pytest.raises(ValueError):
        io.load_scenario(tmp_path / "missing.json")
