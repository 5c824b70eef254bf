import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rkfol.leaves import LeafError, annulus_leaf, leaf_audit, leaf_table, mirror_leaf, solve_leaf
from rkfol.stack import FOUR_PI, SCENARIO_APPENDIX, SCENARIO_R, TWO_PI, build_stack

MODEL = build_stack(SCENARIO_R)
APP = build_stack(SCENARIO_APPENDIX)
R2, R3 = MODEL.radii


@settings(max_examples=6)
@given(st.floats(0.05, 0.95))
def test_plane_energy_independent_of_init(frac):
    lam1, lam3 = MODEL.lam1, SCENARIO_R.lam3
    leaf = solve_leaf(MODEL, "plane_x2_0", lam1 + frac * (lam3 - lam1), n=1024)
    assert leaf.energy == pytest.approx(np.pi * R3**2, abs=1e-5)
    assert leaf.removable and leaf.asymptotes["+"] == "P3"
    assert np.all(np.diff(leaf.y2) > 0)


def test_plane_2pi_and_cylinder():
    lam1, lam3 = MODEL.lam1, SCENARIO_R.lam3
    leaf = solve_leaf(MODEL, "plane_x2_2pi", 0.5 * (lam1 + lam3), n=1024)
    assert leaf.energy == pytest.approx(np.pi * R2**2, abs=1e-5)
    assert leaf.masses["-"] < 1e-6
    cyl = solve_leaf(MODEL, "cyl_y2_L3", np.pi, n=1024)
    assert cyl.masses["-"] == pytest.approx(np.pi * R2**2, abs=1e-5)
    assert cyl.masses["+"] == pytest.approx(np.pi * R3**2, abs=1e-5)
    audit = leaf_audit(MODEL, cyl)
    assert audit.max_residual() < 1e-7 and audit.monotone


def test_mirror_is_involution_and_swaps_labels():
    leaf = solve_leaf(MODEL, "plane_x2_0", 2.5, n=512)
    m = mirror_leaf(leaf)
    assert m.case == "plane_x2_4pi" and m.asymptotes["+"] == "P3p"
    np.testing.assert_allclose(m.x2, FOUR_PI - leaf.x2)
    back = mirror_leaf(m)
    assert back.case == leaf.case
    np.testing.assert_array_equal(back.y2, leaf.y2)
    np.testing.assert_allclose(back.x2, leaf.x2, atol=1e-14)


def test_leaf_table_columns():
    leaf = solve_leaf(MODEL, "plane_x2_0", 2.5, n=256)
    tab = leaf_table(leaf)
    assert tab.shape[1] == 5
    # energy relation r^2/2 + H~2 = level along the leaf
    np.testing.assert_allclose(0.5 * tab[:, 4] ** 2 + MODEL.h2(tab[:, 2], tab[:, 3]),
                               MODEL.level, atol=1e-9)


def test_annulus_peak_and_energy():
    leaf = annulus_leaf(APP, 0.3, n=1024)
    i = int(np.argmax(leaf.r))
    r_peak = np.sqrt(2 * (APP.level - SCENARIO_APPENDIX.B))
    assert leaf.r[i] == pytest.approx(r_peak, abs=1e-6)
    assert leaf.energy == pytest.approx(TWO_PI * (SCENARIO_APPENDIX.lam3 - APP.lam1)
                                        + TWO_PI * r_peak, abs=1e-5)


def test_regime_and_case_errors():
    with pytest.raises(LeafError):
        solve_leaf(APP, "plane_x2_0", 2.5)
    with pytest.raises(LeafError):
        solve_leaf(MODEL, "disc", 2.5)
    with pytest.raises(LeafError):
        annulus_leaf(MODEL, 0.0)
