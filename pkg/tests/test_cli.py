import json

import numpy as np
import pytest

from rkfol import io
from rkfol.cli import main


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_circular_and_hill(capsys):
    assert main(["circular", "--c", "-2", "--json"]) == 0
    rep = _json(capsys)
    assert [r["label"] for r in rep["roots"]] == ["retro_b", "direct_b", "direct_u"]
    assert main(["hill", "--c", "-2", "--json"]) == 0
    hr = _json(capsys)
    assert hr["r_b"] < 1 < hr["r_u"]


def test_absent_torus_is_config_error(capsys):
    assert main(["torus", "--c", "-2", "--k", "1", "--l", "1"]) == 2
    assert "absent" in capsys.readouterr().err


def test_transform_roundtrip(tmp_path, capsys):
    src = tmp_path / "in.csv"
    io.write_csv(src, ["q1", "q2", "p1", "p2"], [[2.0, 0.0, 0.0, 0.9], [1.5, 0.2, 0.1, -0.7]])
    assert main(["transform", "--input", str(src), "--out", str(tmp_path / "a")]) == 0
    assert main(["transform", "--input", str(tmp_path / "a" / "transform.csv"),
                 "--out", str(tmp_path / "b")]) == 0
    _, back, _ = io.read_csv(tmp_path / "b" / "transform.csv")
    _, orig, _ = io.read_csv(src)
    np.testing.assert_allclose(back, orig, atol=1e-12)


def test_invalid_scenario_leaves_no_output(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"base": "R", "B": -3.0}))
    out = tmp_path / "o"
    assert main(["stack", "--scenario", str(bad), "--out", str(out), "--grid", "32"]) == 2
    assert "B" in capsys.readouterr().err
    assert list(out.iterdir()) == []


def test_leaf_and_return_map(tmp_path, capsys):
    out = tmp_path / "leaf"
    assert main(["leaf", "--scenario", "R", "--case", "cyl_y2_L3", "--init", "3.14159", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert "leaf_cyl_y2_L3.csv" in names
    assert main(["return-map", "--scenario", "R", "--json", "--lmax", "10"]) == 0
    rep = _json(capsys)
    assert len(rep["fixed_points"]) == 1


def test_cz_command(capsys):
    assert main(["cz", "--scenario", "R", "--json", "--orbits", "P2", "P3"]) == 0
    rep = _json(capsys)
    assert rep["P2"]["cz"] == 2 and rep["P3"]["cz"] == 3


def test_verify_subset_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--scenario", "R", "--seed", "0", "--only", "1,4", "--out", str(a)]) == 0
    assert main(["verify", "--scenario", "R", "--seed", "0", "--only", "1,4", "--out", str(b)]) == 0
    assert (a / "verify.json").read_bytes() == (b / "verify.json").read_bytes()
    assert "criterion  1 PASS" in capsys.readouterr().out
