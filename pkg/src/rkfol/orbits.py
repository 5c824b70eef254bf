"""Circular orbits, Hill radii, resonant tori and the (E, L) windows on a level set."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .phase import angular_momentum, kepler_energy, radial_potential

CRITICAL_VALUE = -1.5


# -- scalar root finding ---------------------------------------------------

def bisect_newton(fun, dfun, lo, hi, tol=1e-12, maxiter=200):
    """Root of fun on [lo, hi] with a sign change, bisection then Newton polish."""
    flo, fhi = fun(lo), fun(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-6 * max(1.0, abs(mid)):
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        d = dfun(x)
        if d == 0:
            break
        step = fun(x) / d
        xn = x - step
        if not lo - 1e-3 <= xn <= hi + 1e-3:
            break
        x = xn
        if abs(step) < tol * max(1.0, abs(x)):
            break
    return x


def cubic_real_roots(coeffs, lo, hi, tol=1e-12):
    """Real roots in (lo, hi) of a cubic a3 x^3 + a2 x^2 + a1 x + a0.

    The critical points of the cubic split the window into monotone pieces;
    each piece with a sign change holds exactly one root.
    """
    a3, a2, a1, a0 = coeffs

    def p(x):
        return ((a3 * x + a2) * x + a1) * x + a0

    def dp(x):
        return (3 * a3 * x + 2 * a2) * x + a1

    disc = 4 * a2**2 - 12 * a3 * a1
    cuts = [lo]
    if disc > 0:
        s = np.sqrt(disc)
        cuts += sorted(x for x in ((-2 * a2 - s) / (6 * a3), (-2 * a2 + s) / (6 * a3))
                       if lo < x < hi)
    cuts.append(hi)
    roots = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if p(a) == 0:
            roots.append(a)
        elif np.sign(p(a)) != np.sign(p(b)):
            roots.append(bisect_newton(p, dp, a, b, tol))
    return sorted(set(roots))


# -- Hill region -------------------------------------------------------------

@dataclass(frozen=True)
class HillRadii:
    c: float
    connected: bool
    r_b: float | None = None
    r_u: float | None = None


def hill_radii(c: float) -> HillRadii:
    """Radii where f(r) = c, i.e. roots of r^3 + 2 c r + 2 = 0."""
    if c >= 0:
        raise ValueError("c must be negative")
    if c == CRITICAL_VALUE:
        return HillRadii(c, connected=False, r_b=1.0, r_u=1.0)
    if c > CRITICAL_VALUE:
        return HillRadii(c, connected=True)
    roots = cubic_real_roots((1.0, 0.0, 2.0 * c, 2.0), 0.0, 1e3)
    return HillRadii(c, connected=False, r_b=roots[0], r_u=roots[1])


# -- circular orbits ---------------------------------------------------------

@dataclass(frozen=True)
class CircularOrbit:
    label: str
    E: float
    L: float

    @property
    def radius(self) -> float:
        return self.L**2

    def phase_state(self, angle=0.0) -> np.ndarray:
        r = self.radius
        v = 1.0 / self.L  # signed speed, 1/L = sign * r^(-1/2)
        return np.array([r * np.cos(angle), r * np.sin(angle),
                         -v * np.sin(angle), v * np.cos(angle)])

    def poincare_state(self, angle=0.0) -> np.ndarray:
        """Image in direct (L > 0) or retrograde (L < 0) Poincare variables."""
        return np.array([0.0, angle, 0.0, self.L])


@dataclass(frozen=True)
class CircularOrbitSet:
    c: float
    roots: tuple[CircularOrbit, ...]

    def get(self, label: str) -> CircularOrbit:
        for r in self.roots:
            if r.label == label:
                return r
        raise KeyError(label)


def circular_cubic(c):
    """Coefficients of 2E(c - E)^2 + 1 expanded in E."""
    return (2.0, -4.0 * c, 2.0 * c**2, 1.0)


def circular_orbits(c: float) -> CircularOrbitSet:
    if c >= 0 or c == CRITICAL_VALUE:
        raise ValueError("circular_orbits requires c < 0 and c != -3/2")
    roots = cubic_real_roots(circular_cubic(c), -1e3, 0.0)
    if c < CRITICAL_VALUE:
        labels = ("retro_b", "direct_b", "direct_u")
    else:
        labels = ("retro_u",)
    if len(roots) != len(labels):
        raise RuntimeError(f"expected {len(labels)} roots at c={c}, found {len(roots)}")
    return CircularOrbitSet(c, tuple(CircularOrbit(lab, float(E), float(E - c))
                                     for lab, E in zip(labels, roots)))


def lambda_circular(c: float) -> float:
    """|L| of the circular orbit bounding the unbounded component (Lambda_1 / -nu_1)."""
    label = "direct_u" if c < CRITICAL_VALUE else "retro_u"
    return abs(circular_orbits(c).get(label).L)


# -- resonant tori -----------------------------------------------------------

@dataclass(frozen=True)
class TorusRecord:
    k: int
    l: int
    E: float
    L: float
    e: float
    collision: bool


def _check_kl(k, l):
    if k < 1 or l < 1:
        raise ValueError("k and l must be positive")
    if gcd(k, l) != 1:
        raise ValueError(f"(k, l) = ({k}, {l}) is not coprime")


def torus_energy(k: int, l: int) -> float:
    _check_kl(k, l)
    return -0.5 * (k / l) ** (2.0 / 3.0)


def torus_on_level(c: float, k: int, l: int) -> TorusRecord | None:
    E = torus_energy(k, l)
    L = E - c
    e2 = 2.0 * E * L**2 + 1.0
    if not 0.0 <= e2 <= 1.0:
        return None
    collision = abs(L) < 1e-10
    if collision:
        e2 = 1.0
    return TorusRecord(k, l, E, L, float(np.sqrt(e2)), collision)


def tori_on_level(c: float, lmax: int = 40, e_range=None):
    """All tori with l <= lmax present on the level; optionally filter by E window."""
    out = []
    for l in range(1, lmax + 1):
        for k in range(1, lmax + 1):
            if gcd(k, l) != 1:
                continue
            rec = torus_on_level(c, k, l)
            if rec is None:
                continue
            if e_range is not None and not e_range[0] <= rec.E <= e_range[1]:
                continue
            out.append(rec)
    return out


# -- level-set sampling and (E, L) windows -----------------------------------

def sample_level(c, n, rng, component="u", rmax=5.0):
    """States on H = c, drawn by picking q then p on the circle of admissible speeds.

    Uses H = 1/2 |p + (q2, -q1)|^2 + f(|q|): for each q with f(|q|) <= c the
    momenta form a circle of radius sqrt(2(c - f)).
    """
    hr = hill_radii(c)
    if hr.connected:
        lo, hi = 1e-2, rmax
    elif component == "u":
        lo, hi = hr.r_u, rmax
    else:
        lo, hi = 1e-2, hr.r_b
    r = rng.uniform(lo, hi, n)
    th = rng.uniform(0, 2 * np.pi, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    rho = np.sqrt(np.maximum(2.0 * (c - radial_potential(r)), 0.0))
    q1, q2 = r * np.cos(th), r * np.sin(th)
    p1 = -q2 + rho * np.cos(phi)
    p2 = q1 + rho * np.sin(phi)
    return np.stack([q1, q2, p1, p2], axis=-1)


@dataclass
class RangeReport:
    c: float
    component: str
    n: int
    E_min: float
    E_max: float
    L_min: float
    L_max: float
    E_bounds: tuple
    L_bounds: tuple
    ok: bool = field(default=False)


def el_range_report(c: float, samples: int = 2000, seed: int = 0):
    """Sample bound orbits on each component and compare (E, L) with the windows."""
    rng = np.random.default_rng(seed)
    cs = circular_orbits(c)
    if c < CRITICAL_VALUE:
        comps = {
            "u": ((cs.get("direct_u").E, 0.0), (cs.get("direct_u").L, -c)),
            "b": ((cs.get("retro_b").E, cs.get("direct_b").E),
                  (cs.get("retro_b").L, cs.get("direct_b").L)),
        }
    else:
        comps = {"u": ((cs.get("retro_u").E, 0.0), (cs.get("retro_u").L, -c))}
    reports = []
    for name, (eb, lb) in comps.items():
        Z = sample_level(c, samples, rng, component=name)
        E, L = kepler_energy(Z), angular_momentum(Z)
        keep = E < 0
        E, L = E[keep], L[keep]
        tol = 1e-9
        ok = bool(np.all(E >= eb[0] - tol) and np.all(E <= eb[1] + tol)
                  and np.all(L >= lb[0] - tol) and np.all(L <= lb[1] + tol))
        reports.append(RangeReport(c, name, int(keep.sum()), float(E.min()), float(E.max()),
                                   float(L.min()), float(L.max()), eb, lb, ok))
    return reports
