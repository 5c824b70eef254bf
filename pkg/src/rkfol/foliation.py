"""Disc foliations of the unbounded components, the first-return map on a disc,
fixed points, T_{k,l} crossing counts, and the transverse-foliation report.

Direct Poincare variables (x1, x2, y1, y2) carry

    H = -1 / (2 y2^2) - y2 + (x1^2 + y1^2) / 2,

so x2' = 1/y2^3 - 1 and (x1, y1) turns clockwise at unit speed. In the
retrograde chart y2 < 0 and the quadratic term changes sign, which reverses
the rotation. Every disc x2 = const is crossed downwards in x2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .coords import (_phi, _psi, poincare_array, poincare_inverse_array, retrograde_array,
                     wrap_diff)
from .orbits import CRITICAL_VALUE, circular_orbits, torus_on_level, tori_on_level
from .phase import vector_field

TWO_PI = 2.0 * np.pi
RESONANCE_TOL = 1e-9
MAX_RESONANCE = 10**6


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class Window:
    """Energy window [E_circ, E0] of one unbounded component in Poincare y2."""
    regime: str
    c: float
    E0: float
    E_circ: float
    y_circ: float      # Lambda_1 (direct) or nu_1 (retro)
    y_edge: float      # Lambda_2 or nu_2

    @property
    def y_range(self):
        return tuple(sorted((self.y_circ, self.y_edge)))

    @property
    def sign(self):
        return 1.0 if self.regime == "direct" else -1.0


def window(c: float, E0: float, regime: str = "direct") -> Window:
    if regime == "direct":
        if not c < CRITICAL_VALUE:
            raise WindowError(f"direct discs need c < -3/2, got c = {c}")
        E_circ = circular_orbits(c).get("direct_u").E
        if not E_circ < E0 < 0:
            raise WindowError(f"E0 = {E0} outside (E_direct^u, 0) = ({E_circ:.9g}, 0)")
        return Window(regime, c, E0, E_circ, 1 / np.sqrt(-2 * E_circ), 1 / np.sqrt(-2 * E0))
    if regime == "retro":
        if not CRITICAL_VALUE < c < 0:
            raise WindowError(f"retrograde discs need -3/2 < c < 0, got c = {c}")
        E_circ = circular_orbits(c).get("retro_u").E
        # L = E - c must stay nonpositive on the window
        if not E_circ < E0 <= c:
            raise WindowError(f"E0 = {E0} outside (E_retro^u, c] = ({E_circ:.9g}, {c})")
        return Window(regime, c, E0, E_circ, -1 / np.sqrt(-2 * E_circ), -1 / np.sqrt(-2 * E0))
    raise WindowError(f"unknown regime {regime!r}")


def _h2(y, sign):
    """Planar part -1/(2 y^2) - y; the sign of the (x1, y1) term is applied by the caller."""
    return -0.5 / y**2 - y


def disc_radius(w: Window, y2):
    """Radius of the (x1, y1)-disc over y2 on H = c."""
    y2 = np.asarray(y2, dtype=float)
    q = 2 * w.sign * (w.c - _h2(y2, w.sign))
    # at the circular orbit q vanishes up to cancellation error
    q = np.where(np.abs(q) < 64 * np.finfo(float).eps * abs(w.c), 0.0, q)
    return np.sqrt(np.maximum(q, 0.0))


def x2_rate(y2):
    return 1.0 / np.asarray(y2, dtype=float) ** 3 - 1.0


def rotation_rate(w: Window):
    """Angular speed of (x1, y1): -1 direct (clockwise), +1 retrograde."""
    return -w.sign


@dataclass
class DiscLeaf:
    window: Window
    x2_base: float

    @property
    def y_range(self):
        return self.window.y_range

    @property
    def boundary_radius(self):
        return float(disc_radius(self.window, self.window.y_edge))

    @property
    def centre_radius(self):
        return float(disc_radius(self.window, self.window.y_circ))

    def radius(self, y2):
        return disc_radius(self.window, y2)

    def sample(self, n, rng, interior=True):
        """Points (x1, x2, y1, y2) on the disc: y2 uniform, angle uniform."""
        lo, hi = self.y_range
        y = rng.uniform(lo, hi, n)
        rad = self.radius(y) * (rng.uniform(0, 1, n) if interior else 1.0)
        th = rng.uniform(0, TWO_PI, n)
        return np.stack([rad * np.cos(th), np.full(n, self.x2_base), rad * np.sin(th), y],
                        axis=-1)

    def transversality(self, n=2001):
        """min |x2'| over the y2-range, and the sign of x2' (all negative)."""
        y = np.linspace(*self.y_range, n)
        v = x2_rate(y)
        return float(np.min(np.abs(v))), bool(np.all(v < 0))

    def to_dict(self):
        return {"regime": self.window.regime, "x2_base": self.x2_base,
                "y_range": list(self.y_range), "boundary_radius": self.boundary_radius,
                "centre_radius": self.centre_radius}


def disc_leaf(c, E0, x2_base=0.0, regime="direct") -> DiscLeaf:
    return DiscLeaf(window(c, E0, regime), float(x2_base))


# -- return map ---------------------------------------------------------------

@dataclass
class ReturnMapResult:
    point: np.ndarray
    time: float
    image: np.ndarray
    angle: float

    def to_dict(self):
        return {"point": list(map(float, self.point)), "time": self.time,
                "image": list(map(float, self.image)), "angle": self.angle}


def return_time(y2):
    """Time for x2 to drop by 2 pi: 2 pi / |1/y2^3 - 1|."""
    return TWO_PI / np.abs(x2_rate(y2))


def _rotate(x1, y1, ang):
    c, s = np.cos(ang), np.sin(ang)
    return c * x1 - s * y1, s * x1 + c * y1


def return_map(c, E0, point, regime="direct", tol=1e-12) -> ReturnMapResult:
    """Closed-form first return to the disc through `point` = (x1, y1, y2)."""
    w = window(c, E0, regime)
    x1, y1, y2 = map(float, point)
    lo, hi = w.y_range
    if not lo - tol <= y2 <= hi + tol:
        raise WindowError(f"y2 = {y2} outside the disc range [{lo:.9g}, {hi:.9g}]")
    if np.hypot(x1, y1) > disc_radius(w, y2) * (1 + tol) + tol:
        raise WindowError("point lies outside the disc")
    T = float(return_time(y2))
    ang = rotation_rate(w) * T
    X1, Y1 = _rotate(x1, y1, ang)
    return ReturnMapResult(np.array([x1, y1, y2]), T, np.array([X1, Y1, y2]),
                           float(np.mod(ang, TWO_PI)))


def return_map_array(w: Window, P):
    P = np.asarray(P, dtype=float)
    T = return_time(P[:, 2])
    X1, Y1 = _rotate(P[:, 0], P[:, 1], rotation_rate(w) * T)
    return np.stack([X1, Y1, P[:, 2]], axis=-1), T


def _to_cartesian(w: Window, X):
    if w.regime == "direct":
        return poincare_inverse_array(X)
    return _psi(poincare_inverse_array(_phi(X)))


def _to_poincare(w: Window, Z):
    return poincare_array(Z) if w.regime == "direct" else retrograde_array(Z)


def integrated_return(w: Window, P, x2_base=0.0, chunk=25, rtol=1e-12, atol=1e-13,
                      n_scan=600):
    """First return found by integrating the rotating Kepler flow in Cartesian form.

    Each chunk of points is integrated as one stacked system with dense output;
    the crossing of the Poincare angle through x2_base (downwards) is bracketed
    on a scan grid and refined by Newton steps on the interpolant.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    X = np.stack([P[:, 0], np.full(len(P), x2_base), P[:, 1], P[:, 2]], axis=-1)
    Z0 = _to_cartesian(w, X)
    t_max = 1.25 * float(np.max(return_time(P[:, 2])))
    images, times = [], []
    for i0 in range(0, len(P), chunk):
        z0 = Z0[i0:i0 + chunk]
        n = len(z0)
        scale = np.sqrt(z0.size)
        sol = solve_ivp(lambda t, y: vector_field(y.reshape(n, 4), None).ravel(), (0, t_max),
                        z0.ravel(), method="DOP853", rtol=rtol / scale, atol=atol / scale,
                        dense_output=True)
        ts = np.linspace(0, t_max, n_scan)
        Zs = sol.sol(ts).T.reshape(n_scan, n, 4)
        lam = _to_poincare(w, Zs)[..., 1]
        d = wrap_diff(lam - x2_base)
        t_hit = np.empty(n)
        for j in range(n):
            ok = np.nonzero((ts[:-1] > 0.25) & (d[:-1, j] > 0) & (d[1:, j] <= 0)
                            & (np.abs(d[:-1, j]) < 1.0))[0]
            if ok.size == 0:
                raise RuntimeError("no return within the integration window")
            k = ok[0]
            t = ts[k] + d[k, j] / (d[k, j] - d[k + 1, j]) * (ts[k + 1] - ts[k])
            for _ in range(8):
                z = sol.sol(t).reshape(n, 4)[j]
                g = wrap_diff(_to_poincare(w, z)[1] - x2_base)
                rate = float(x2_rate(_to_poincare(w, z)[3]))
                t -= g / rate
            t_hit[j] = t
        zs = np.stack([sol.sol(t_hit[j]).reshape(n, 4)[j] for j in range(n)])
        Xr = _to_poincare(w, zs)
        images.append(np.stack([Xr[:, 0], Xr[:, 2], Xr[:, 3]], axis=-1))
        times.append(t_hit)
    return np.concatenate(images), np.concatenate(times)


def return_map_agreement(c, E0, n=1000, seed=0, regime="direct", x2_base=0.0):
    """max |closed form - integrated| over random disc points (x1, y1, y2 and time)."""
    w = window(c, E0, regime)
    disc = DiscLeaf(w, x2_base)
    X = disc.sample(n, np.random.default_rng(seed))
    P = X[:, [0, 2, 3]]
    closed, T = return_map_array(w, P)
    numer, Tn = integrated_return(w, P, x2_base)
    return float(max(np.max(np.abs(closed - numer)), np.max(np.abs(T - Tn))))


# -- fixed points ---------------------------------------------------------------

@dataclass
class FixedPoint:
    kind: str            # "origin" (circular orbit) or "circle" (resonant circle)
    y2: float
    label: tuple | None
    time: float

    def to_dict(self):
        return {"kind": self.kind, "y2": self.y2, "label": self.label, "time": self.time}


def fixed_points(c, E0, regime="direct", y_window=None):
    """Fixed points of the first-return map on a disc.

    The origin (the circular orbit) is always fixed. Elsewhere the map is a
    rotation by the return time, so a whole circle is fixed when
    y2^3 / (y2^3 - 1) = m is an integer, i.e. on a T_{m-1, m} torus.
    """
    w = window(c, E0, regime)
    lo, hi = y_window if y_window is not None else w.y_range
    out = [FixedPoint("origin", float(w.y_circ), None, float(return_time(w.y_circ)))]
    if regime != "direct":
        # |x2'| = 1 + 1/|y2|^3 > 1, so the return time is below 2 pi
        return out
    # m = y^3 / (y^3 - 1) decreases in y
    m_lo = int(np.floor(hi**3 / (hi**3 - 1)))
    m_hi = int(np.ceil(lo**3 / (lo**3 - 1))) if lo > 1 else MAX_RESONANCE
    for m in range(max(m_lo, 2), min(m_hi, MAX_RESONANCE) + 1):
        y = (m / (m - 1)) ** (1 / 3)
        if not lo <= y <= hi:
            continue
        if abs(y**3 / (y**3 - 1) - m) < RESONANCE_TOL and abs(y - w.y_circ) > 1e-12:
            out.append(FixedPoint("circle", float(y), (m - 1, m), float(return_time(y))))
    return out


# -- crossing counts -------------------------------------------------------------

@dataclass
class CrossingRecord:
    k: int
    l: int
    closed_form: int
    integrated: int | None
    E: float
    y2: float

    def to_dict(self):
        return dict(self.__dict__)


def crossing_closed_form(k, l, regime="direct"):
    """Disc crossings of one T_{k,l} orbit per period 2 pi l."""
    return l - k if regime == "direct" else l + k


def integrated_crossings(c, k, l, regime="direct", x2_base=0.0, phase=1.0):
    """Count downward passes of the Poincare angle through x2_base over 2 pi l."""
    rec = torus_on_level(c, k, l)
    if rec is None or rec.collision:
        raise WindowError(f"T_({k},{l}) is not a regular torus on the level c = {c}")
    sign = 1.0 if regime == "direct" else -1.0
    y2 = sign * (l / k) ** (1 / 3)
    rad = np.sqrt(max(2 * sign * (c - _h2(y2, sign)), 0.0))
    X = np.array([rad * np.cos(phase), x2_base + 0.5, rad * np.sin(phase), y2])
    w = Window(regime, c, rec.E, rec.E, y2, y2)
    z0 = _to_cartesian(w, X[None])[0]

    def ev(t, z):
        return np.sin(_to_poincare(w, z)[1] - x2_base)
    ev.direction = -1.0
    sol = solve_ivp(lambda t, z: vector_field(z, None), (0, TWO_PI * l), z0, method="DOP853",
                    rtol=1e-12, atol=1e-13, events=ev)
    return len(sol.t_events[0]), float(np.max(np.abs(sol.y[:, -1] - z0)))


def crossing_count(c, k, l, x2_base=0.0, regime="direct", integrate=True) -> CrossingRecord:
    rec = torus_on_level(c, k, l)
    if rec is None:
        raise WindowError(f"T_({k},{l}) is absent from the level c = {c}")
    n_int = integrated_crossings(c, k, l, regime, x2_base)[0] if integrate else None
    sign = 1.0 if regime == "direct" else -1.0
    return CrossingRecord(k, l, crossing_closed_form(k, l, regime), n_int, rec.E,
                          float(sign * (l / k) ** (1 / 3)))


def crossing_table(c, E0, regime="direct", lmax=24, integrate=True):
    w = window(c, E0, regime)
    lo, hi = sorted((w.E_circ, w.E0))
    tori = [t for t in tori_on_level(c, lmax, (lo, hi)) if not t.collision]
    want_direct = regime == "direct"
    tori = [t for t in tori if (t.L > 0) == want_direct]
    return [crossing_count(c, t.k, t.l, 0.0, regime, integrate) for t in tori]


# -- report -----------------------------------------------------------------------

class IncompleteReport(ValueError):
    pass


@dataclass
class FoliationReport:
    regime: str
    binding: list
    leaves: list
    transversality: dict
    fixed_points: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    rho_closed: bool | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"regime": self.regime, "binding": self.binding, "leaves": self.leaves,
                "transversality": self.transversality,
                "fixed_points": [f.to_dict() for f in self.fixed_points],
                "crossings": [c.to_dict() for c in self.crossings],
                "rho_closed": self.rho_closed, "notes": self.notes}


def _leaf_entry(leaf):
    if leaf.case == "annulus":
        punct = {"-": {"orbit": leaf.asymptotes["-"], "sign": +1},
                 "+": {"orbit": leaf.asymptotes["+"], "sign": +1}}
    else:
        punct = {"+": {"orbit": leaf.asymptotes["+"], "sign": +1}}
        if leaf.signs["-"] != 0:
            punct["-"] = {"orbit": leaf.asymptotes["-"], "sign": -1}
    kind = {"annulus": "annulus", "cyl_y2_L3": "cylinder",
            "cyl_y2_L3_mirror": "cylinder"}.get(leaf.case, "plane")
    return {"case": leaf.case, "kind": kind, "init": leaf.init, "theta": leaf.theta,
            "punctures": punct, "energy": leaf.energy,
            "masses": leaf.masses}


def assemble_report(regime, model, leaves, orbits, transversality=None,
                    fixed=None, crossings=None) -> FoliationReport:
    """Collect binding orbits (with CZ indices), leaves and puncture data.

    `orbits` maps names to OrbitRecord with `cz` filled in.
    """
    from .leaves import MIRROR_CASE

    for name, orb in orbits.items():
        if orb.cz is None:
            raise IncompleteReport(f"binding orbit {name} has no Conley-Zehnder index")
    binding = [{"name": n, "cz": int(o.cz), "period_H": o.period_H,
                "period_Reeb": o.period_reeb, "symmetric": o.symmetric}
               for n, o in orbits.items()]
    entries = [_leaf_entry(L) for L in leaves]
    rho_closed = None
    if regime == "lower":
        have = {(L.case, round(L.init, 9)) for L in leaves}
        rho_closed = True
        for L in leaves:
            mc = MIRROR_CASE[L.case]
            mi = 4 * np.pi - L.init if L.case.startswith("cyl") else L.init
            if (mc, round(mi, 9)) not in have:
                rho_closed = False
    return FoliationReport(regime, binding, entries, transversality or {},
                           fixed or [], crossings or [], rho_closed)


def ratio_label(k, l):
    return str(Fraction(l, k))


# -- annulus pages over the direct component --------------------------------------

@dataclass
class CoverReport:
    n: int
    assigned: int
    max_error: float
    theta: np.ndarray
    s: np.ndarray

    def to_dict(self):
        return {"n": self.n, "assigned": self.assigned, "max_error": self.max_error}


def sample_direct_component(c, E0, n, rng):
    """Poincare points of the direct unbounded component with E in [E_direct^u, E0]."""
    from .orbits import sample_level
    from .phase import angular_momentum, kepler_energy

    w = window(c, E0, "direct")
    out, got = [], 0
    while got < n:
        Z = sample_level(c, 8 * n, rng, "u")
        E, L = kepler_energy(Z), angular_momentum(Z)
        keep = (E >= w.E_circ) & (E <= w.E0) & (L > 0)
        X = poincare_array(Z[keep])
        out.append(X)
        got += len(X)
    return np.concatenate(out)[:n]


def annulus_cover(model, leaf, X, newton=8):
    """Assign each point to its page theta = atan2(y1, x1) and parameter s.

    s solves y2(s) = y2 on the leaf's dense solution; the point is rebuilt from
    (theta, s, x2) and compared with the input.
    """
    sol_m, sol_p = leaf.meta["sol_m"], leaf.meta["sol_p"]
    c = model.level
    X = np.atleast_2d(X)
    theta = np.arctan2(X[:, 2], X[:, 0])
    y_grid, s_grid = leaf.y2, leaf.s
    inside = (X[:, 3] > y_grid[0]) & (X[:, 3] < y_grid[-1])
    s = np.interp(X[:, 3], y_grid, s_grid)
    y_fit = np.empty_like(s)
    for i in range(len(s)):
        if not inside[i]:
            y_fit[i] = np.nan
            continue
        si = s[i]
        for _ in range(newton):
            sol = sol_m if si < 0 else sol_p
            yi = sol.sol(si)[0]
            j = model.h2_jet(0.0, yi)
            d = c - float(j.v)
            rate = 4 * np.pi * d / (2 * d + float(j.y) ** 2)
            si -= (yi - X[i, 3]) / rate
        s[i] = si
        y_fit[i] = (sol_m if si < 0 else sol_p).sol(si)[0]
    r = np.sqrt(np.maximum(2 * (c - model.h2(0.0, y_fit)), 0.0))
    rebuilt = np.stack([r * np.cos(theta), X[:, 1], r * np.sin(theta), y_fit], axis=-1)
    err = np.max(np.abs(rebuilt - X), axis=1)
    ok = inside & (err < 1e-8)
    monotone = bool(np.all(np.diff(leaf.y2) > 0))
    assigned = int(np.sum(ok)) if monotone else 0
    return CoverReport(len(X), assigned, float(np.nanmax(np.where(inside, err, np.inf))),
                       theta, s)
