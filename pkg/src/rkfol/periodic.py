"""Periodic orbits of the model Hamiltonians.

Because H~ = H1 + H~2 splits, every orbit is a product of a rotation in the
(x1, y1)-plane (unit angular speed, period 2 pi) with an orbit of the planar
Hamiltonian H~2. Constant planar parts give the binding orbits P2, P3, P3';
a vanishing (x1, y1)-part gives P0; everything else lies on invariant tori and
closes up when the planar loop period is a rational multiple of 2 pi.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .stack import FOUR_PI, TWO_PI, ModelHamiltonian

RTOL, ATOL = 1e-12, 1e-13


@dataclass
class OrbitRecord:
    kind: str
    times: np.ndarray
    states: np.ndarray
    period_H: float
    label: str = ""
    at: Callable | None = None
    period_reeb: float | None = None
    cz: int | None = None
    symmetric: bool | None = None
    meta: dict = field(default_factory=dict)

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    def to_dict(self):
        return {"kind": self.kind, "period_H": self.period_H, "period_Reeb": self.period_reeb,
                "cz": self.cz, "symmetric": self.symmetric}


def circle_orbit(model: ModelHamiltonian, name: str, n: int = 512) -> OrbitRecord:
    """P2 (x2 = 2 pi), P3 (x2 = 0) or P3p (x2 = 4 pi): w(t) = (r sin t, x2, r cos t, lam3)."""
    r2, r3 = model.radii
    x2, r = {"P2": (TWO_PI, r2), "P3": (0.0, r3), "P3p": (FOUR_PI, r3)}[name]
    lam3 = model.params.lam3

    def at(t):
        t = np.asarray(t, dtype=float)
        return np.stack([r * np.sin(t), np.full_like(t, x2), r * np.cos(t),
                         np.full_like(t, lam3)], axis=-1)

    t = np.linspace(0.0, TWO_PI, n + 1)
    return OrbitRecord(kind=name, times=t, states=at(t), period_H=TWO_PI, label=name,
                       at=at, meta={"radius": float(r)})


def appendix_orbit(model: ModelHamiltonian, name: str, n: int = 512) -> OrbitRecord:
    """Q1 (y2 = lam1) or Q2 (y2 = Lambda_max): x1 = y1 = 0, x2 moving at a constant rate."""
    y2 = model.lam1 if name == "Q1" else model.lambda_max(0.0)
    rate = float(model.h2_jet(0.0, y2).y)
    T = TWO_PI / abs(rate)

    def at(t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.zeros_like(t), rate * t, np.zeros_like(t), np.full_like(t, y2)],
                        axis=-1)

    t = np.linspace(0.0, T, n + 1)
    return OrbitRecord(kind=name, times=t, states=at(t), period_H=T, label=name, at=at,
                       meta={"y2": float(y2), "rate": rate})


def binding_orbit(model: ModelHamiltonian, name: str, n: int = 512) -> OrbitRecord:
    if name in ("Q1", "Q2"):
        return appendix_orbit(model, name, n)
    return circle_orbit(model, name, n)


# -- planar loops --------------------------------------------------------------

def _planar_rhs(model):
    def rhs(t, u):
        _, jx, jy, _, _, _ = model._h2_scalar(float(u[0]), float(u[1]))
        return [jy, -jx]
    return rhs


def _axis_point(model, h, axis_x):
    """Point (axis_x, y2) on the lower branch of H~2 = h between the Kepler side and lam3."""
    p = model.params
    lam3 = p.lam3
    if model.regime == "upper":
        lo, hi = lam3, model.lam1
    else:
        lo, hi = model.lam1 * 0.5 + 0.5, lam3  # strictly above y2 = 1
    return brentq(lambda y: float(model.h2(axis_x, y)) - h, lo, hi, xtol=1e-15)


def planar_loop(model: ModelHamiltonian, h: float, family: str):
    """Closed level curve of H~2 = h starting on the axis x2 = 0 or 2 pi.

    family 'inner' circles the minimum at x2 = 0 (h between the minimum and the
    saddle value), 'outer' circles all three critical points (h between the
    saddle value and the level). Returns (start point, period, solution).
    """
    axis_x = 0.0 if family == "inner" else TWO_PI
    y0 = _axis_point(model, h, axis_x)
    rhs = _planar_rhs(model)
    sgn = -1.0 if model.regime == "upper" else 1.0

    def cross(t, u):
        return u[0] - axis_x

    up = lambda t, u: cross(t, u)  # noqa: E731
    up.terminal, up.direction = True, sgn * 1.0
    s1 = solve_ivp(rhs, (0, 1e4), [axis_x, y0], method="DOP853", rtol=RTOL, atol=ATOL,
                   events=up)
    t1 = s1.t_events[0][0]
    down = lambda t, u: cross(t, u)  # noqa: E731
    down.terminal, down.direction = True, -sgn * 1.0
    s2 = solve_ivp(rhs, (t1, t1 + 1e4), s1.y_events[0][0], method="DOP853", rtol=RTOL,
                   atol=ATOL, events=down)
    T = s2.t_events[0][0]
    return np.array([axis_x, y0]), float(T)


def loop_period(model, h, family):
    return planar_loop(model, h, family)[1]


def loop_energy_window(model: ModelHamiltonian, family: str, margin=1e-3):
    p = model.params
    vmin, vsad = -1.0 + p.B, 1.0 + p.B
    if family == "inner":
        return vmin + margin, vsad - margin
    return vsad + margin, model.level - margin


def loop_periods(model: ModelHamiltonian, hs, family: str):
    """Loop periods for an array of planar energies."""
    hs = np.atleast_1d(np.asarray(hs, dtype=float))
    return np.array([planar_loop(model, float(h), family)[1] for h in hs])


_PERIOD_TABLES: dict = {}


def period_table(model: ModelHamiltonian, family: str, n=16):
    key = (model.params, family, n)
    if key not in _PERIOD_TABLES:
        lo, hi = loop_energy_window(model, family)
        # Chebyshev spacing resolves the steep ends of the period curve
        hs = lo + (hi - lo) * 0.5 * (1 - np.cos(np.linspace(0, np.pi, n)))
        _PERIOD_TABLES[key] = (hs, loop_periods(model, hs, family))
    return _PERIOD_TABLES[key]


def energies_for_periods(model, family, targets, xtol=1e-13):
    """Planar energies whose loop periods equal the targets.

    The first bracket in the period table is refined with Brent's method. The
    period is steep near both ends of a family, so the stopping rule is on h.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    hs, Ts = period_table(model, family)
    out = np.empty(targets.size)
    for m, T in enumerate(targets):
        d = Ts - T
        idx = np.nonzero(d[:-1] * d[1:] <= 0)[0]
        if idx.size == 0:
            raise ValueError(f"period {T:.6g} not attained by the {family} family "
                             f"(range {Ts.min():.6g} .. {Ts.max():.6g})")
        i = idx[0]
        out[m] = brentq(lambda h: loop_period(model, h, family) - T, hs[i], hs[i + 1],
                        xtol=xtol, rtol=4 * np.finfo(float).eps)
    return out


def energy_for_period(model, family, target):
    return float(energies_for_periods(model, family, [target])[0])


def period_range(model, family):
    _, Ts = period_table(model, family)
    return float(Ts.min()), float(Ts.max())


def integrate_orbit(model: ModelHamiltonian, z0, T, n=2049, kind="torus", label=""):
    sol = solve_ivp(lambda t, z: model.vector_field(z), (0, T), np.asarray(z0, dtype=float),
                    method="DOP853", rtol=RTOL, atol=ATOL, dense_output=True)
    t = np.linspace(0, T, n)

    def at(s):
        return sol.sol(np.mod(s, T)).T

    return OrbitRecord(kind=kind, times=t, states=sol.sol(t).T, period_H=float(T),
                       label=label, at=at)


def torus_orbit(model: ModelHamiltonian, ratio: Fraction, family: str, phase: float = 0.0,
                n: int = 2049, h: float | None = None) -> OrbitRecord:
    """Closed orbit on a torus whose planar loop period is 2 pi * ratio.

    With ratio = p/q in lowest terms the orbit closes after q planar loops and
    p turns in the (x1, y1)-plane; its period is 2 pi p.
    """
    ratio = Fraction(ratio)
    T2 = TWO_PI * float(ratio)
    h = energy_for_period(model, family, T2) if h is None else h
    axis_x = 0.0 if family == "inner" else TWO_PI
    start = (axis_x, _axis_point(model, h, axis_x))
    r = np.sqrt(2 * (model.level - h))
    z0 = np.array([r * np.sin(phase), start[0], r * np.cos(phase), start[1]])
    T = TWO_PI * ratio.numerator
    orb = integrate_orbit(model, z0, T, n=n, kind="torus", label=f"{family}:{ratio}")
    orb.meta.update({"ratio": str(ratio), "family": family, "h": float(h), "radius": float(r),
                     "loop_period": T2, "phase": float(phase)})
    return orb


def torus_orbits(model: ModelHamiltonian, specs, n: int = 2049):
    """Batch version: specs is a list of (ratio, family, phase)."""
    out = [None] * len(specs)
    for fam in ("inner", "outer"):
        idx = [i for i, sp in enumerate(specs) if sp[1] == fam]
        if not idx:
            continue
        # phases share the planar energy, so each ratio is solved once
        ratios = sorted({Fraction(specs[i][0]) for i in idx})
        hs = energies_for_periods(model, fam, [TWO_PI * float(r) for r in ratios])
        h_of = dict(zip(ratios, hs))
        for i in idx:
            ratio, _, phase = specs[i]
            out[i] = torus_orbit(model, ratio, fam, phase, n, h=float(h_of[Fraction(ratio)]))
    return out


def rational_ratios(lo, hi, pmax, qmax):
    """Distinct fractions p/q in (lo, hi) with p <= pmax, q <= qmax, sorted."""
    out = {Fraction(p, q) for p in range(1, pmax + 1) for q in range(1, qmax + 1)
           if lo < p / q < hi}
    return sorted(out)


def p0_orbit(model: ModelHamiltonian, n: int = 2049) -> OrbitRecord:
    """x1 = y1 = 0 and H~2 = level: the outer loop at the full energy."""
    h = model.level
    start, T = planar_loop(model, h, "outer")
    z0 = np.array([0.0, start[0], 0.0, start[1]])
    orb = integrate_orbit(model, z0, T, n=n, kind="P0", label="P0")
    orb.meta["loop_period"] = T
    return orb


def closure_defect(orbit: OrbitRecord) -> float:
    return float(np.max(np.abs(orbit.states[-1] - orbit.states[0])))
