import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkfol.stack import (FOUR_PI, SCENARIO_APPENDIX, SCENARIO_R, SCENARIO_UPPER, TWO_PI,
                         ParameterError, SigmaSampler, build_stack, critical_points,
                         involution, sign_certificates, smooth_step)
from dataclasses import replace

MODELS = {name: build_stack(p) for name, p in
          (("R", SCENARIO_R), ("appendix", SCENARIO_APPENDIX), ("upper", SCENARIO_UPPER))}

xs = st.floats(-1.0, 4 * np.pi + 1.0)


def _ys(name):
    return st.floats(-4.0, -0.3) if name == "upper" else st.floats(0.3, 6.0)


@given(st.floats(-1, 2))
def test_smooth_step_range_and_ends(t):
    v, d1, d2 = smooth_step(t)
    assert 0.0 <= v <= 1.0 and d1 >= 0.0 and np.isfinite(d2)
    va, d1a, d2a = smooth_step(np.array([t]))
    assert va[0] == pytest.approx(v, abs=1e-300) and d1a[0] == pytest.approx(d1, rel=1e-12, abs=1e-300)
    if t <= 0:
        assert v == 0.0
    if t >= 1:
        assert v == 1.0


@pytest.mark.parametrize("name", list(MODELS))
@given(data=st.data())
def test_scalar_jet_matches_array_jet(name, data):
    m = MODELS[name]
    x, y = data.draw(xs), data.draw(_ys(name))
    a = m.h2_jet(np.array([x]), np.array([y]))
    s = m._h2_scalar(x, y)
    for u, v in zip(s, (a.v, a.x, a.y, a.xx, a.xy, a.yy)):
        assert u == pytest.approx(float(np.ravel(v)[0]), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", list(MODELS))
@given(data=st.data())
def test_jet_derivatives_finite_difference(name, data):
    m = MODELS[name]
    x, y = data.draw(xs), data.draw(_ys(name))
    h = 1e-5
    j = m.h2_jet(x, y)
    gx = (m.h2(x + h, y) - m.h2(x - h, y)) / (2 * h)
    gy = (m.h2(x, y + h) - m.h2(x, y - h)) / (2 * h)
    assert float(j.x) == pytest.approx(float(gx), abs=1e-6 * (1 + abs(gx)))
    assert float(j.y) == pytest.approx(float(gy), abs=1e-6 * (1 + abs(gy)))
    jyp, jym = m.h2_jet(x, y + h), m.h2_jet(x, y - h)
    assert float(j.yy) == pytest.approx(float((jyp.y - jym.y) / (2 * h)), abs=1e-5 * (1 + abs(j.yy)))


@given(xs, st.floats(0.3, 6.0), st.floats(-2, 2), st.floats(-2, 2))
def test_involution_symmetry(x2, y2, x1, y1):
    m = MODELS["R"]
    z = np.array([x1, x2, y1, y2])
    assert m.value(involution(z)) == pytest.approx(m.value(z), rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(involution(involution(z)), z, atol=1e-14)


def test_derived_radii_scenario_r():
    m = MODELS["R"]
    r2, r3 = m.radii
    assert r2 == pytest.approx(np.sqrt(2)) and r3 == pytest.approx(np.sqrt(6))
    assert m.lambda_max(0.0) == pytest.approx(3 + np.sqrt(6), abs=1e-12)
    assert m.lambda_max(TWO_PI) == pytest.approx(3 + np.sqrt(2), abs=1e-12)


def test_critical_points_scenario_r():
    rep = critical_points(MODELS["R"])
    got = sorted((round(p.x2, 9), round(p.y2, 9), round(p.value, 9), p.morse_index)
                 for p in rep.points)
    want = [(0.0, 3.0, -5.0, 0), (round(TWO_PI, 9), 3.0, -3.0, 1), (round(FOUR_PI, 9), 3.0, -5.0, 0)]
    assert got == want


def test_sign_certificate_small_grid():
    rep = sign_certificates(MODELS["R"], n=96)
    assert rep.below_ok and rep.above_ok


def test_sigma_samples_on_level(rng):
    for name in ("R", "appendix"):
        m = MODELS[name]
        Z = SigmaSampler(m).sample(300, rng)
        np.testing.assert_allclose(m.value(Z), m.level, atol=1e-12)
        assert np.all(Z[:, 3] > 1)


@pytest.mark.parametrize("change", [dict(B=0.0), dict(eps0=2.0), dict(c=-1.0), dict(E0=-5.0),
                                    dict(lam3=1.0)])
def test_invalid_parameters_rejected(change):
    with pytest.raises(ParameterError):
        build_stack(replace(SCENARIO_R, **change))
