"""Acceptance suite at scenario R, seed 0.

Every test checks the measured quantities at the stated tolerances (not just
the pass flag of the verify report) and the stated runtime budget. One
PASS/FAIL line per criterion is printed in the terminal summary.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from rkfol import verify
from rkfol.stack import FOUR_PI, SCENARIO_R, TWO_PI, build_stack

PARAMS = SCENARIO_R
SEED = 0
RESULTS = {}

# runtime budgets in seconds, None where no budget is stated
BUDGET = {1: 1.0, 2: 120.0, 3: 60.0, 4: 1.0, 5: 60.0, 6: 60.0, 7: 120.0, 8: None,
          9: 60.0, 10: 60.0}


def _run(n):
    t0 = time.perf_counter()
    res = verify.CRITERIA[n](PARAMS, SEED)
    return res, time.perf_counter() - t0


@pytest.fixture
def record(request):
    """Stores the outcome of the calling criterion test for the summary lines."""
    box = {}
    yield box
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    RESULTS[box["n"]] = (ok, box.get("title", ""), box.get("note", ""))


def _check(record, n, title=None):
    record["n"] = n
    record["title"] = title or verify.TITLES[n]
    res, dt = _run(n)
    record["note"] = f"{dt:.2f} s"
    if BUDGET[n] is not None:
        assert dt < BUDGET[n], f"runtime {dt:.1f} s over budget {BUDGET[n]} s"
    return res.measured


def test_criterion_01_critical_value(record):
    m = _check(record, 1)
    assert abs(m["r"] - 1.0) < 1e-10
    assert abs(m["f"] + 1.5) < 1e-10
    assert abs(m["r_bounded_search"] - 1.0) < 1e-5
    assert abs(m["H_1001"] + 1.5) <= 4 * np.finfo(float).eps


def test_criterion_02_conservation(record):
    m = _check(record, 2)
    assert m["n"] == 1000 and m["t_final"] == 50.0
    assert max(m["drift_H"], m["drift_E"], m["drift_L"]) < 1e-7
    assert m["inertial_defect"] < 1e-6


def test_criterion_03_symplecticity(record):
    m = _check(record, 3)
    assert m["n"] == 1000
    assert m["max_defect"] < 1e-6
    assert m["negative_control_fraction"] >= 0.9


def test_criterion_04_circular_taxonomy(record):
    m = _check(record, 4)
    r = m["roots"]
    assert len(m["oracle"]) == 3
    got = [r["retro_b"], r["direct_b"], r["direct_u"]]
    assert max(abs(a - b) for a, b in zip(got, m["oracle"])) < 1e-10
    assert got[0] < got[1] < -0.5 < got[2]
    E = r["direct_u"]
    assert abs((E - m["c"]) - (-2 * E) ** -0.5) < 1e-8


def test_criterion_05_stack_properties(record):
    m = _check(record, 5)
    pts = m["critical_points"]
    assert len(pts) == 3
    for got, want in zip(pts, [(0.0, 3.0, -5.0, 0), (TWO_PI, 3.0, -3.0, 1),
                               (FOUR_PI, 3.0, -5.0, 0)]):
        assert np.allclose(got[:3], want[:3], rtol=0, atol=1e-8)
        assert got[3] == want[3]
    assert m["sign_grid"] >= 512 * 511
    assert m["sign_below"] and m["sign_above"]
    assert m["sigma_y2_min"] > 1


def test_criterion_06_transversality(record):
    m = _check(record, 6)
    assert m["lower"]["n"] == 10000 and m["appendix"]["n"] == 10000
    assert m["lower"]["min"] > 0
    assert m["appendix"]["min"] > 0


def test_criterion_07_cz_indices(record):
    m = _check(record, 7)
    b = m["binding"]
    assert (b["P2"]["cz"], b["P3"]["cz"], b["P3p"]["cz"]) == (2, 3, 3)
    assert not any(v["degenerate"] for v in b.values())
    assert len(m["torus_cz"]) == 50 and min(m["torus_cz"]) >= 3
    assert len(m["pairs"]) == 20
    assert all(mu == mu_rho for _, mu, mu_rho in m["pairs"])


def test_criterion_08_leaf_suite(record):
    m = _check(record, 8)
    model = build_stack(PARAMS)
    for key in ("plane_x2_0_low", "plane_x2_0_high"):
        leaf = m[key]
        assert leaf["monotone"] and leaf["endpoint_error"] < 1e-6
        assert abs(leaf["energy"] - 6 * math.pi) < 1e-5
    for key in ("plane_x2_2pi_low", "plane_x2_2pi_high"):
        leaf = m[key]
        assert leaf["endpoint_error"] < 1e-6
        assert abs(leaf["energy"] - 2 * math.pi) < 1e-5
        assert leaf["masses"]["-"] < 1e-6
    cyl = m["cylinder"]["masses"]
    assert abs(cyl["-"] - 2 * math.pi) < 1e-5 and abs(cyl["+"] - 6 * math.pi) < 1e-5
    assert all(m[k]["audit_max"] < 1e-7 for k in m if isinstance(m[k], dict) and "audit_max" in m[k])
    assert m["mirror_involution_error"] < 1e-12
    # derived energies agree with the model radii
    r2, r3 = model.radii
    assert abs(math.pi * r3**2 - 6 * math.pi) < 1e-12 and abs(math.pi * r2**2 - 2 * math.pi) < 1e-12


def test_criterion_09_appendix_annulus(record):
    m = _check(record, 9)
    assert m["unimodal"]
    assert abs(m["r_max"] - 2.0) < 1e-6
    assert abs(m["y2_at_max"] - PARAMS.lam3) < 1e-6
    lam1 = build_stack(PARAMS).lam1
    assert abs(m["energy"] - (TWO_PI * (PARAMS.lam3 - lam1) + 4 * math.pi)) < 1e-5
    assert m["cover"]["assigned"] == m["cover"]["n"] == 2000


def test_criterion_10_disc_foliation(record):
    m = _check(record, 10)
    assert m["x2_rate_negative"] and m["transversality"] > 0.1
    fp = m["fixed_points"]
    assert len(fp) == 1 and fp[0]["kind"] == "origin"
    assert abs(fp[0]["y2"] - 1.8546376797) < 1e-9
    assert m["crossings"]
    for k, l, closed, integrated in m["crossings"]:
        assert closed == l - k >= 2 and integrated == closed
    assert m["return_map_agreement"] < 1e-8


def test_criterion_11_determinism(record, tmp_path):
    record["n"] = 11
    record["title"] = "determinism of the verify report"
    cmd = [sys.executable, "-m", "rkfol", "verify", "--scenario", "R", "--seed", "0", "--out"]
    t0 = time.perf_counter()
    procs = [subprocess.Popen(cmd + [str(tmp_path / d)], stdout=subprocess.DEVNULL,
                              stderr=subprocess.PIPE) for d in ("a", "b")]
    for p in procs:
        _, err = p.communicate(timeout=900)
        assert p.returncode in (0, 1), err.decode()
    record["note"] = f"{time.perf_counter() - t0:.1f} s"
    a = (tmp_path / "a" / "verify.json").read_bytes()
    b = (tmp_path / "b" / "verify.json").read_bytes()
    assert a == b
