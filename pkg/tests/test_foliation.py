import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkfol.foliation import (WindowError, crossing_closed_form, crossing_count, crossing_table,
                             disc_leaf, disc_radius, fixed_points, integrated_return,
                             return_map, return_map_array, return_time, window)
from rkfol.orbits import lambda_circular

C, E0 = -2.0, -0.1


def test_window_edges():
    w = window(C, E0)
    assert w.y_circ == pytest.approx(lambda_circular(C), abs=1e-12)
    assert w.y_edge == pytest.approx((-2 * E0) ** -0.5)
    assert disc_radius(w, w.y_circ) == 0.0
    with pytest.raises(WindowError):
        window(-1.0, E0)
    with pytest.raises(WindowError):
        window(C, 0.5)
    with pytest.raises(WindowError):
        window(-1.0, -0.5, "retro")  # E0 above c


@given(st.floats(0, 2 * np.pi), st.floats(0, 1), st.floats(0, 1))
def test_return_map_preserves_radius_and_area(th, u, v):
    w = window(C, E0)
    lo, hi = w.y_range
    y = lo + u * (hi - lo)
    rad = v * float(disc_radius(w, y))
    res = return_map(C, E0, (rad * np.cos(th), rad * np.sin(th), y))
    assert np.hypot(*res.image[:2]) == pytest.approx(rad, abs=1e-12)
    assert res.image[2] == y
    assert res.time == pytest.approx(float(return_time(y)))


def test_return_map_rejects_outside_points():
    with pytest.raises(WindowError):
        return_map(C, E0, (0.0, 0.0, 10.0))
    w = window(C, E0)
    y = np.mean(w.y_range)
    with pytest.raises(WindowError):
        return_map(C, E0, (2 * float(disc_radius(w, y)) + 1, 0.0, y))


def test_closed_form_matches_integration(rng):
    w = window(C, E0)
    X = disc_leaf(C, E0).sample(8, rng)
    P = X[:, [0, 2, 3]]
    closed, T = return_map_array(w, P)
    num, Tn = integrated_return(w, P)
    np.testing.assert_allclose(num, closed, atol=1e-8)
    np.testing.assert_allclose(Tn, T, atol=1e-8)


def test_disc_transverse():
    margin, negative = disc_leaf(C, E0).transversality()
    assert negative and margin > 0.1


def test_single_fixed_point_at_circular_orbit():
    fp = fixed_points(C, E0)
    assert len(fp) == 1 and fp[0].kind == "origin"
    assert fp[0].y2 == pytest.approx(lambda_circular(C), abs=1e-12)


def test_resonant_circles_when_window_reaches_them():
    # y2^3 / (y2^3 - 1) = 2 at y2 = 2^(1/3): T_(1,2) circle
    fp = fixed_points(C, E0, y_window=(1.2, 1.3))
    assert [f.label for f in fp if f.kind == "circle"] == [(1, 2)]


def test_crossings_closed_form_vs_integration():
    table = crossing_table(C, E0, lmax=12)
    assert table
    for rec in table:
        assert rec.closed_form == rec.l - rec.k >= 2
        assert rec.integrated == rec.closed_form
    assert crossing_closed_form(1, 3, "retro") == 4


def test_absent_torus():
    with pytest.raises(WindowError):
        crossing_count(C, 1, 1)
