import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkfol import coords
from rkfol.coords import (DomainError, kepler_map, poincare_array, poincare_inverse_array,
                          retrograde_array, retrograde_inverse_array, sample_elements,
                          solve_kepler, symplecticity_defect, wrap_diff)
from rkfol.phase import angular_momentum, kepler_energy

elem = st.tuples(st.floats(0.5, 4.0), st.floats(0.0, 0.9), st.floats(0, 2 * np.pi),
                 st.floats(0, 2 * np.pi))


def _state(a, e, beta, M, sign=1.0):
    u = solve_kepler(M, e)
    x, y = a * (np.cos(u) - e), a * np.sqrt(1 - e * e) * np.sin(u)
    n = a ** -1.5
    vx = -a * n * np.sin(u) / (1 - e * np.cos(u))
    vy = a * n * np.sqrt(1 - e * e) * np.cos(u) / (1 - e * np.cos(u))
    c, s = np.cos(beta), np.sin(beta)
    z = np.array([c * x - s * y, s * x + c * y, c * vx - s * vy, s * vx + c * vy])
    # mirror in the q1 axis for clockwise motion
    return z if sign > 0 else z * np.array([1.0, -1.0, 1.0, -1.0])


@given(st.floats(0, 2 * np.pi), st.floats(0, 0.99))
def test_kepler_equation(M, e):
    u = solve_kepler(M, e)
    assert abs(u - e * np.sin(u) - M) < 1e-13


@given(elem)
def test_elements_roundtrip(el):
    a, e, beta, M = el
    z = _state(a, e, beta, M)
    k = kepler_map(z)
    assert k.a == pytest.approx(a, rel=1e-10)
    assert k.e == pytest.approx(e, abs=1e-9)
    assert kepler_energy(z) == pytest.approx(-0.5 / a, rel=1e-12)


@given(elem)
def test_poincare_invariants_and_inverse(el):
    z = _state(*el)
    X = poincare_array(z)
    L = angular_momentum(z)
    # Lambda = sqrt(a) and the (eta, xi) radius measures Lambda - L
    assert X[3] == pytest.approx((-2 * kepler_energy(z)) ** -0.5, rel=1e-12)
    assert 0.5 * (X[0] ** 2 + X[2] ** 2) == pytest.approx(X[3] - L, abs=1e-10)
    np.testing.assert_allclose(poincare_inverse_array(X), z, atol=1e-9)


@given(elem)
def test_retrograde_roundtrip(el):
    z = _state(*el, sign=-1.0)
    assert angular_momentum(z) < 0
    X = retrograde_array(z)
    assert X[3] < 0
    np.testing.assert_allclose(retrograde_inverse_array(X), z, atol=1e-9)


def test_circular_orbit_is_regular():
    z = np.array([4.0, 0.0, 0.0, 0.5])
    X = poincare_array(z)
    np.testing.assert_allclose([X[0], X[2], X[3]], [0.0, 0.0, 2.0], atol=1e-14)


def test_domain_errors():
    with pytest.raises(DomainError):
        poincare_array(np.array([1.0, 0.0, 0.0, 2.0]))  # unbound
    with pytest.raises(DomainError):
        poincare_array(np.array([1.0, 0.0, 0.0, -1.0]))  # retrograde in direct chart


def test_symplecticity_and_negative_control(rng):
    Z = sample_elements(50, rng, e_range=(1e-3, 0.95))
    assert np.max(symplecticity_defect("poincare", Z)) < 1e-6
    bad = symplecticity_defect("poincare_true_anomaly", Z)
    assert np.mean(bad > 1e-2) >= 0.9


@given(st.floats(-50, 50))
def test_wrap_diff_range(d):
    w = wrap_diff(d)
    assert -np.pi <= w <= np.pi
    assert np.isclose(np.cos(w), np.cos(d)) and np.isclose(np.sin(w), np.sin(d), atol=1e-9)
