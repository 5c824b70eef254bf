from fractions import Fraction

import numpy as np
import pytest

from rkfol.periodic import (binding_orbit, closure_defect, loop_period, period_range,
                            rational_ratios, torus_orbit, torus_orbits)
from rkfol.stack import FOUR_PI, SCENARIO_APPENDIX, SCENARIO_R, TWO_PI, build_stack

MODEL = build_stack(SCENARIO_R)


@pytest.mark.parametrize("name", ["P2", "P3", "P3p"])
def test_binding_orbits_solve_the_flow(name):
    orb = binding_orbit(MODEL, name)
    # finite-difference velocity of the closed-form orbit equals X_H
    t = np.linspace(0.1, 6.0, 7)
    h = 1e-6
    vel = (orb.at(t + h) - orb.at(t - h)) / (2 * h)
    np.testing.assert_allclose(vel, MODEL.vector_field(orb.at(t)), atol=1e-7)
    np.testing.assert_allclose(MODEL.value(orb.states), MODEL.level, atol=1e-12)


def test_appendix_orbits_on_level():
    model = build_stack(SCENARIO_APPENDIX)
    for name in ("Q1", "Q2"):
        orb = binding_orbit(model, name)
        np.testing.assert_allclose(model.value(orb.states), model.level, atol=1e-10)
        assert abs(orb.states[-1, 1] - orb.states[0, 1]) == pytest.approx(TWO_PI, rel=1e-12)


def test_inner_loop_tends_to_linear_period():
    # small loops about the minimum at x2 = 0: period 2 pi / sqrt(det Hess)
    j = MODEL.h2_jet(0.0, 3.0)
    T0 = TWO_PI / np.sqrt(float(j.xx * j.yy - j.xy**2))
    assert loop_period(MODEL, -5.0 + 1e-4, "inner") == pytest.approx(T0, rel=1e-3)


def test_period_ranges_bracket_samples():
    lo_i, hi_i = period_range(MODEL, "inner")
    lo_o, hi_o = period_range(MODEL, "outer")
    assert lo_i < TWO_PI < hi_i
    assert lo_o < 3 * TWO_PI < hi_o


@pytest.mark.parametrize("ratio,family", [(Fraction(3, 2), "inner"), (Fraction(3), "outer")])
def test_torus_orbit_closes(ratio, family):
    orb = torus_orbit(MODEL, ratio, family, phase=0.3, n=513)
    assert closure_defect(orb) < 1e-7
    np.testing.assert_allclose(MODEL.value(orb.states), MODEL.level, atol=1e-9)
    assert orb.period_H == pytest.approx(TWO_PI * ratio.numerator)


def test_batch_shares_energy_across_phases():
    orbs = torus_orbits(MODEL, [(Fraction(2), "inner", 0.0), (Fraction(2), "inner", 1.0)], n=129)
    assert orbs[0].meta["h"] == orbs[1].meta["h"]
    assert orbs[0].meta["radius"] == pytest.approx(orbs[1].meta["radius"])


def test_rational_ratios_are_reduced_and_sorted():
    rs = rational_ratios(1, 3, 7, 5)
    assert rs == sorted(set(rs))
    assert all(1 < r < 3 and r.numerator <= 7 and r.denominator <= 5 for r in rs)
