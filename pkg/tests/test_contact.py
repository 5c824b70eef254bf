import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkfol.contact import (TransversalityError, assemble_liouville, involution_suite,
                           liouville_defect, reeb_period, reeb_trace_distance,
                           rho_pullback_defect, transversality_scan)
from rkfol.periodic import binding_orbit
from rkfol.stack import FOUR_PI, SCENARIO_APPENDIX, SCENARIO_R, SigmaSampler, build_stack

MODEL = build_stack(SCENARIO_R)
FIELD = assemble_liouville(MODEL)
APP = build_stack(SCENARIO_APPENDIX)
APP_FIELD = assemble_liouville(APP)

pt = st.tuples(st.floats(-2, 2), st.floats(-0.5, FOUR_PI + 0.5), st.floats(-2, 2),
               st.floats(1.2, 5.5))


@given(pt)
def test_liouville_condition(z):
    # d(iota_Y omega0) = omega0 at every point, including the splice near 2 pi
    assert liouville_defect(FIELD, np.array(z))[0] < 1e-6
    assert liouville_defect(APP_FIELD, np.array(z))[0] < 1e-6


@given(pt, st.tuples(*[st.floats(-1, 1)] * 4))
def test_involution_reverses_lambda(z, v):
    assert rho_pullback_defect(FIELD, np.array(z), np.array(v)) < 1e-10


def test_transversality_positive_on_sigma():
    rep = transversality_scan(MODEL, FIELD, 2000, seed=3)
    assert rep.min > 0
    assert transversality_scan(APP, APP_FIELD, 2000, seed=3).min > 0


def test_reeb_rejects_nonpositive_points():
    with pytest.raises(TransversalityError):
        FIELD.reeb(np.array([0.0, 0.0, 0.0, 3.0]))  # critical point of H~, X_H = 0


def test_reeb_flow_is_reparametrized_hamiltonian_flow(rng):
    z0 = SigmaSampler(MODEL).sample(1, rng)[0]
    assert reeb_trace_distance(MODEL, FIELD, z0, 2.0, n=50) < 1e-8


def test_binding_orbit_actions_and_symmetry():
    r2, r3 = MODEL.radii
    P2, P3 = binding_orbit(MODEL, "P2"), binding_orbit(MODEL, "P3")
    assert reeb_period(FIELD, P2) == pytest.approx(np.pi * r2**2, abs=1e-9)
    assert reeb_period(FIELD, P3) == pytest.approx(np.pi * r3**2, abs=1e-9)
    assert involution_suite(FIELD, P2).symmetric
    rep = involution_suite(FIELD, P3)
    assert not rep.symmetric
    assert rep.reeb_period_mirror == pytest.approx(rep.reeb_period, abs=1e-9)
