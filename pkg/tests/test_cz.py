from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkfol.contact import mirror_orbit
from rkfol.cz import (RotationInterval, _kappa_batch, _kappa_scalar, cz_index, frame,
                      is_degenerate, orbit_index, variational_monodromy)
from rkfol.periodic import binding_orbit, torus_orbit
from rkfol.stack import FOUR_PI, SCENARIO_R, build_stack

MODEL = build_stack(SCENARIO_R)
pt = st.tuples(st.floats(-2, 2), st.floats(-0.5, FOUR_PI + 0.5), st.floats(-2, 2),
               st.floats(1.2, 5.5))


def _iv(lo, hi):
    return RotationInterval(lo, hi, is_degenerate(lo, hi), np.eye(2), np.array([lo, hi]), 0.0)


@given(pt)
def test_kappa_closed_form_matches_matrix_route(z):
    z = np.array(z)
    (k11, k12, k22, k33, n2), vf = _kappa_scalar(MODEL, z)
    K, N2 = _kappa_batch(MODEL, z[None])
    np.testing.assert_allclose([k11, k12, k22, k33, n2],
                               [K[0, 0, 0], K[0, 0, 1], K[0, 1, 1], K[0, 2, 2], N2[0]],
                               rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(vf, MODEL.vector_field(z), atol=1e-12)


@given(pt)
def test_frame_is_orthogonal(z):
    fr = frame(MODEL, np.array(z))
    np.testing.assert_allclose(fr.X @ fr.X.T, fr.norm2 * np.eye(3), atol=1e-9 * fr.norm2)


@given(st.integers(-5, 5), st.floats(0.01, 0.9), st.floats(0.05, 0.95))
def test_odd_index_between_multiples(k, width, pos):
    # interval strictly inside (2k pi, 2(k+1) pi)
    lo = 2 * np.pi * k + pos * (2 * np.pi - width)
    assert cz_index(_iv(lo, lo + width)) == 2 * k + 1


@given(st.integers(-5, 5), st.floats(0.01, 3.0), st.floats(0.05, 0.95))
def test_even_index_across_multiple(k, width, pos):
    lo = 2 * np.pi * k - pos * width
    assert cz_index(_iv(lo, lo + width)) == 2 * k


def test_binding_indices():
    got = {}
    for name in ("P2", "P3", "P3p"):
        mu, iv = orbit_index(MODEL, binding_orbit(MODEL, name), n_init=64)
        assert not iv.degenerate
        got[name] = mu
    assert got == {"P2": 2, "P3": 3, "P3p": 3}


def test_monodromy_two_routes():
    orb = binding_orbit(MODEL, "P2")
    _, iv = orbit_index(MODEL, orb, n_init=32)
    M = variational_monodromy(MODEL, orb)
    np.testing.assert_allclose(iv.monodromy, M, atol=1e-7)
    assert abs(np.linalg.det(M) - 1) < 1e-8


def test_torus_orbit_index_and_mirror():
    orb = torus_orbit(MODEL, Fraction(3, 2), "inner", phase=0.4, n=1025)
    mu, iv = orbit_index(MODEL, orb, n_init=32)
    mu_r, _ = orbit_index(MODEL, mirror_orbit(orb), n_init=32)
    assert mu >= 3 and mu == mu_r
