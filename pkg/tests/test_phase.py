import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkfol import phase
from rkfol.phase import (CollisionError, angular_momentum, flow, hamiltonian,
                         hamiltonian_completed_square, kepler_energy, reflection, rotate)

coord = st.floats(-3.0, 3.0, allow_nan=False)
state = st.tuples(coord, coord, coord, coord).filter(lambda z: np.hypot(z[0], z[1]) > 0.05)


@given(state)
def test_hamiltonian_is_energy_minus_momentum(z):
    z = np.array(z)
    assert hamiltonian(z) == pytest.approx(kepler_energy(z) - angular_momentum(z), abs=1e-12)
    assert hamiltonian(z) == pytest.approx(hamiltonian_completed_square(z), rel=1e-12, abs=1e-10)


@given(state, st.floats(-7, 7))
def test_rotation_preserves_integrals(z, th):
    z = np.array(z)
    w = rotate(z, th)
    for fn in (hamiltonian, kepler_energy, angular_momentum):
        assert fn(w) == pytest.approx(fn(z), rel=1e-12, abs=1e-11)


@given(state)
def test_vector_field_is_symplectic_gradient(z):
    z = np.array(z)
    h = 1e-6
    g = np.array([(hamiltonian(z + h * e) - hamiltonian(z - h * e)) / (2 * h) for e in np.eye(4)])
    want = np.array([g[2], g[3], -g[0], -g[1]])
    np.testing.assert_allclose(phase.vector_field(z), want, rtol=1e-5, atol=1e-5 / np.hypot(z[0], z[1])**2)


def test_radial_potential_peak():
    r = np.linspace(0.2, 3, 2801)
    f = phase.radial_potential(r)
    assert r[np.argmax(f)] == pytest.approx(1.0, abs=1e-3)
    assert f.max() == pytest.approx(-1.5, abs=1e-6)


def test_flow_conserves_and_reflection_reverses_time():
    z0 = np.array([1.3, 0.2, -0.1, 0.9])
    tr = flow(z0, 10.0, tol=1e-11, atol=1e-13, method="DOP853")
    assert tr.max_defect < 1e-8
    back = flow(reflection(tr.states[-1]), 10.0, tol=1e-11, atol=1e-13, method="DOP853")
    np.testing.assert_allclose(reflection(back.states[-1]), z0, atol=1e-7)


def test_inertial_factorization_small():
    z0 = np.array([[1.0, 0.0, 0.0, 1.1], [0.0, 2.0, -0.6, 0.1]])
    assert phase.inertial_factorization_defect(z0, 5.0, tol=1e-11, atol=1e-13,
                                               method="DOP853") < 1e-7


def test_collision_rejected():
    with pytest.raises(CollisionError):
        hamiltonian(np.zeros(4))
    with pytest.raises(CollisionError):
        flow(np.array([1.0, 0.0, 0.0, 0.0]), 5.0)
