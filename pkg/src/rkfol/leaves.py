"""Axisymmetric finite-energy leaves of the model stacks.

With u(s, t) = (r sin 2 pi t, x2, r cos 2 pi t, y2) and one of x2 = 0, 2 pi or
y2 = lam3 frozen, the Cauchy-Riemann system collapses to a scalar ODE
v' = P(v) for the moving planar coordinate v; r follows from the energy
relation r^2 / 2 + K = c and the R-component from a' = lambda(u_t) = pi r^2.
The appendix annulus u(s, t) = (r cos th, 2 pi t, r sin th, y2) is handled
the same way with a' = 2 pi (y2 - lam3).

Every solve integrates r^2 and a alongside v, so the energy relation and the
quadrature for a are checked against an independent route.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp

from .contact import LiouvilleField
from .cz import frame
from .stack import FOUR_PI, TWO_PI, ModelHamiltonian

STOP_TOL = 1e-9
RTOL, ATOL = 1e-12, 1e-14

CASES = ("plane_x2_0", "plane_x2_2pi", "plane_x2_4pi", "cyl_y2_L3", "cyl_y2_L3_mirror",
         "annulus")
MIRROR_CASE = {"plane_x2_0": "plane_x2_4pi", "plane_x2_4pi": "plane_x2_0",
               "plane_x2_2pi": "plane_x2_2pi", "cyl_y2_L3": "cyl_y2_L3_mirror",
               "cyl_y2_L3_mirror": "cyl_y2_L3"}
MIRROR_LABEL = {"P3": "P3p", "P3p": "P3", "P2": "P2", "none": "none"}


class LeafError(ValueError):
    pass


@dataclass
class Leaf:
    case: str
    init: float
    s: np.ndarray
    a: np.ndarray
    x2: np.ndarray
    y2: np.ndarray
    r: np.ndarray
    asymptotes: dict           # {"+": label, "-": label}
    signs: dict                # {"+": +1, "-": -1 or 0 (removable)}
    energy: float
    masses: dict               # {"+": float, "-": float}
    limits: dict               # extrapolated limits of the moving coordinate
    theta: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def removable(self) -> bool:
        return self.signs["-"] == 0

    def u(self, i, t):
        """Point u(s_i, t) on the energy surface."""
        th = TWO_PI * t
        if self.case == "annulus":
            return np.array([self.r[i] * np.cos(self.theta), th, self.r[i] * np.sin(self.theta),
                             self.y2[i]])
        return np.array([self.r[i] * np.sin(th), self.x2[i], self.r[i] * np.cos(th),
                         self.y2[i]])

    def sidecar(self):
        return {"case": self.case, "init": self.init, "asymptotes": self.asymptotes,
                "energy": self.energy, "masses": self.masses, "theta": self.theta}


# -- scalar profiles ---------------------------------------------------------

class _Profile:
    """v' = P(v) together with K(v), K'(v) along the frozen line."""

    def __init__(self, model: ModelHamiltonian, case: str):
        self.model = model
        self.case = case
        self.c = model.level
        self.lam3 = model.params.lam3
        if case == "annulus":
            self.fixed = 0.0
        elif case == "plane_x2_0":
            self.fixed = 0.0
        elif case == "plane_x2_2pi":
            self.fixed = TWO_PI
        else:
            self.fixed = self.lam3

    def jet(self, v):
        if self.case == "cyl_y2_L3":
            j = self.model.h2_jet(v, self.fixed)
            return float(j.v), float(j.x), float(j.xx)
        j = self.model.h2_jet(self.fixed, v)
        return float(j.v), float(j.y), float(j.yy)

    def rate(self, v):
        K, Kv, _ = self.jet(v)
        d = self.c - K
        if self.case == "annulus":
            return 4 * np.pi * d / (2 * d + Kv * Kv)
        return -4 * np.pi * d * Kv / (Kv * Kv + 2 * d)

    def drate(self, v, h=1e-7):
        return (self.rate(v + h) - self.rate(v - h)) / (2 * h)

    def rhs(self, s, w):
        v, q = w[0], w[1]
        K, Kv, _ = self.jet(v)
        vd = self.rate(v)
        ad = TWO_PI * (v - self.lam3) if self.case == "annulus" else np.pi * q
        return [vd, -2 * Kv * vd, ad]


def _limits(model: ModelHamiltonian, case: str, init: float):
    """Equilibria (v(-inf), v(+inf)) for an initial value, plus asymptote labels."""
    lam1, lam3 = model.lam1, model.params.lam3
    if case == "annulus":
        hi = model.lambda_max(0.0)
        if not lam1 < init < hi:
            raise LeafError(f"init {init} outside ({lam1:.6g}, {hi:.6g})")
        return (lam1, hi), ("Q1", "Q2")
    if case == "cyl_y2_L3":
        if not 0.0 < init < TWO_PI:
            raise LeafError(f"init {init} outside (0, 2 pi)")
        return (TWO_PI, 0.0), ("P2", "P3")
    x0 = 0.0 if case == "plane_x2_0" else TWO_PI
    top = model.lambda_max(x0)
    label = "P3" if x0 == 0.0 else "P2"
    if lam1 < init < lam3:
        return (lam1, lam3), ("none", label)
    if lam3 < init < top:
        return (top, lam3), ("none", label)
    raise LeafError(f"init {init} must lie in ({lam1:.6g}, {lam3:.6g}) or "
                    f"({lam3:.6g}, {top:.6g}); boundary values are binding orbits")


def _half(prof: _Profile, w0, target, direction, smax=400.0):
    def near(s, w):
        return abs(w[0] - target) - STOP_TOL
    near.terminal = True
    sol = solve_ivp(prof.rhs, (0.0, direction * smax), w0, method="DOP853", rtol=RTOL,
                    atol=ATOL, events=near, dense_output=True)
    if sol.status != 1:
        raise LeafError(f"equilibrium {target:.6g} not reached ({sol.message})")
    return sol


def _extrapolate(prof: _Profile, v_end):
    """Exponential-tail limit v_inf = v_end + P(v_end) / kappa with kappa = -P'(v_end)."""
    kappa = -prof.drate(v_end)
    return v_end + prof.rate(v_end) / kappa


def _grid(sol_m, sol_p, n):
    """Nodes split between uniform-in-s and uniform-in-v placement."""
    s_lo, s_hi = sol_m.t[-1], sol_p.t[-1]
    n_s = n // 2
    s_uniform = np.linspace(s_lo, s_hi, n_s)
    s_all = np.concatenate([sol_m.t[::-1], sol_p.t[1:]])
    v_all = np.concatenate([sol_m.y[0][::-1], sol_p.y[0][1:]])
    order = np.argsort(v_all)
    v_nodes = np.linspace(v_all.min(), v_all.max(), n - n_s)
    s_by_v = np.interp(v_nodes, v_all[order], s_all[order])
    return np.unique(np.concatenate([s_uniform, s_by_v, [0.0]]))


def _evaluate(sol_m, sol_p, s):
    out = np.empty((3, s.size))
    neg = s < 0
    out[:, neg] = sol_m.sol(s[neg])
    out[:, ~neg] = sol_p.sol(s[~neg])
    return out


def _solve(model: ModelHamiltonian, case: str, init: float, n: int, theta=None) -> Leaf:
    prof = _Profile(model, case)
    (v_minus, v_plus), (lab_m, lab_p) = _limits(model, case, init)
    K0 = prof.jet(init)[0]
    w0 = [init, 2 * (prof.c - K0), 0.0]
    sol_m = _half(prof, w0, v_minus, -1)
    sol_p = _half(prof, w0, v_plus, +1)
    s = _grid(sol_m, sol_p, n)
    v, q_ode, a_ode = _evaluate(sol_m, sol_p, s)
    K = np.array([prof.jet(x)[0] for x in v])
    q = 2 * (prof.c - K)
    r = np.sqrt(np.maximum(q, 0.0))
    if case == "annulus":
        a = cumulative_simpson(TWO_PI * (v - prof.lam3), x=s, initial=0.0)
    else:
        a = cumulative_simpson(np.pi * q, x=s, initial=0.0)
    a = a - np.interp(0.0, s, a)
    lim_m = _extrapolate(prof, sol_m.y[0, -1])
    lim_p = _extrapolate(prof, sol_p.y[0, -1])
    if case == "annulus":
        masses = {"-": float(TWO_PI * (prof.lam3 - lim_m)), "+": float(TWO_PI * (lim_p - prof.lam3))}
        energy = masses["-"] + masses["+"]
        signs = {"-": +1, "+": +1}
    else:
        masses = {"-": float(2 * np.pi * (prof.c - prof.jet(lim_m)[0])),
                  "+": float(2 * np.pi * (prof.c - prof.jet(lim_p)[0]))}
        energy = masses["+"]
        signs = {"+": +1, "-": 0 if lab_m == "none" else -1}
    if case == "cyl_y2_L3":
        x2, y2 = v, np.full_like(v, prof.lam3)
    elif case == "annulus":
        x2, y2 = np.zeros_like(v), v
    else:
        x2, y2 = np.full_like(v, prof.fixed), v
    meta = {"q_ode": q_ode, "a_ode": a_ode, "v_minus": v_minus, "v_plus": v_plus,
            "sol_m": sol_m, "sol_p": sol_p}
    return Leaf(case, float(init), s, a, x2, y2, r, {"-": lab_m, "+": lab_p}, signs,
                float(energy), masses, {"-": float(lim_m), "+": float(lim_p)}, theta, meta)


def solve_leaf(model: ModelHamiltonian, case: str, init: float, n: int = 4096) -> Leaf:
    if model.regime != "lower":
        raise LeafError(f"plane and cylinder leaves need the lower stack, got {model.regime}")
    if case == "plane_x2_4pi":
        return mirror_leaf(solve_leaf(model, "plane_x2_0", init, n))
    if case == "cyl_y2_L3_mirror":
        return mirror_leaf(solve_leaf(model, "cyl_y2_L3", FOUR_PI - init, n))
    if case not in ("plane_x2_0", "plane_x2_2pi", "cyl_y2_L3"):
        raise LeafError(f"unknown case {case!r}")
    return _solve(model, case, init, n)


def mirror_leaf(leaf: Leaf) -> Leaf:
    """Image under rho: x2 -> 4 pi - x2 with (s, t) -> (s, -t); a is unchanged."""
    if leaf.case not in MIRROR_CASE:
        raise LeafError(f"no mirror for case {leaf.case!r}")
    case = MIRROR_CASE[leaf.case]
    cyl = leaf.case.startswith("cyl")
    init = FOUR_PI - leaf.init if cyl else leaf.init
    limits = {k: (FOUR_PI - v if cyl else v) for k, v in leaf.limits.items()}
    return replace(leaf, case=case, init=init, x2=FOUR_PI - leaf.x2,
                   asymptotes={k: MIRROR_LABEL[v] for k, v in leaf.asymptotes.items()},
                   limits=limits, meta=dict(leaf.meta))


def annulus_leaf(model: ModelHamiltonian, theta: float, init: float | None = None,
                 n: int = 4096) -> Leaf:
    """Annulus page of the appendix model at angle theta (y2(0) = lam3 by default)."""
    if model.regime != "appendix":
        raise LeafError("annulus leaves need the appendix model")
    init = model.params.lam3 if init is None else init
    return _solve(model, "annulus", init, n, theta=float(theta))


# -- audit -------------------------------------------------------------------

@dataclass
class LeafAudit:
    energy_relation: float
    lam_us: float
    a_quadrature: float
    cauchy_riemann: float
    determinant_min: float
    determinant_formula: float
    monotone: bool

    def max_residual(self):
        return max(self.energy_relation, self.lam_us, self.a_quadrature, self.cauchy_riemann,
                   self.determinant_formula)

    def to_dict(self):
        return dict(self.__dict__)


def _derivatives(model, leaf, i):
    """(K_v, v', x2', y2') at node i."""
    if leaf.case == "annulus":
        v = leaf.y2[i]
        j = model.h2_jet(0.0, v)
        Kv, K = float(j.y), float(j.v)
        d = model.level - K
        vd = 4 * np.pi * d / (2 * d + Kv * Kv)
        return Kv, vd, 0.0, vd
    if leaf.case.startswith("cyl"):
        j = model.h2_jet(leaf.x2[i], leaf.y2[i])
        Kv, K = float(j.x), float(j.v)
        d = model.level - K
        vd = -4 * np.pi * d * Kv / (Kv * Kv + 2 * d)
        return Kv, vd, vd, 0.0
    j = model.h2_jet(leaf.x2[i], leaf.y2[i])
    Kv, K = float(j.y), float(j.v)
    d = model.level - K
    vd = -4 * np.pi * d * Kv / (Kv * Kv + 2 * d)
    return Kv, vd, 0.0, vd


def _tangents(model, leaf, i, t):
    Kv, vd, xd, yd = _derivatives(model, leaf, i)
    r = leaf.r[i]
    rd = -Kv * vd / r if r > 0 else 0.0
    th = TWO_PI * t
    if leaf.case == "annulus":
        us = np.array([rd * np.cos(leaf.theta), 0.0, rd * np.sin(leaf.theta), yd])
        ut = np.array([0.0, TWO_PI, 0.0, 0.0])
    else:
        us = np.array([rd * np.sin(th), xd, rd * np.cos(th), yd])
        ut = TWO_PI * np.array([r * np.cos(th), 0.0, -r * np.sin(th), 0.0])
    return us, ut


def leaf_audit(model: ModelHamiltonian, leaf: Leaf, n_s: int = 41, n_t: int = 8,
               field_: LiouvilleField | None = None) -> LeafAudit:
    """Residuals of the reconstructed curve; rejects degenerate (zero-width) leaves."""
    v = leaf.x2 if leaf.case.startswith("cyl") else leaf.y2
    if np.ptp(v) < 1e-12 or np.ptp(leaf.s) <= 0:
        raise LeafError("degenerate leaf: the moving coordinate has zero width")
    Y = field_ or LiouvilleField(model)
    c = model.level
    K = model.h2(leaf.x2, leaf.y2)
    q_ode = leaf.meta["q_ode"]
    e_rel = float(np.max(np.abs(0.5 * q_ode + K - c)))
    a_ref = leaf.meta["a_ode"]
    a_ref = a_ref - np.interp(0.0, leaf.s, a_ref)
    a_err = float(np.max(np.abs(leaf.a - a_ref)) / max(1.0, np.max(np.abs(a_ref))))
    dv = np.diff(v)
    monotone = bool(np.all(dv > 0) or np.all(dv < 0))

    idx = np.unique(np.linspace(0, leaf.s.size - 1, n_s).astype(int))
    idx = idx[(leaf.r[idx] > 1e-6)]
    cr, lus, dmin, dform = 0.0, 0.0, np.inf, 0.0
    for i in idx:
        for t in np.arange(n_t) / n_t:
            z = leaf.u(i, t)
            us, ut = _tangents(model, leaf, i, t)
            R = Y.reeb(z)

            def proj(w):
                return w - Y.lam(z, w) * R

            fr = frame(model, z)
            X1, X2 = proj(fr.X[0]), proj(fr.X[1])
            B = np.stack([X1, X2], axis=1)
            coef = np.linalg.lstsq(B, proj(ut), rcond=None)[0]
            Jut = coef[0] * X2 - coef[1] * X1
            cr = max(cr, float(np.max(np.abs(proj(us) + Jut))))
            lus = max(lus, abs(float(Y.lam(z, us))))
            if leaf.case != "annulus":
                sq, tr = X1[[1, 3]], X2[[1, 3]]
                det = tr[0] * sq[1] - tr[1] * sq[0]
                k = float(Y.lam(z, model.vector_field(z)))
                g = model.grad(z)
                r2 = leaf.r[i] ** 2
                ref = r2 * (r2 + g[1] ** 2 + g[3] ** 2) / (2 * k)
                dmin = min(dmin, det)
                dform = max(dform, abs(det - ref) / max(1.0, abs(ref)))
    return LeafAudit(e_rel, lus, a_err, cr, float(dmin) if np.isfinite(dmin) else float("nan"),
                     dform, monotone)


def leaf_table(leaf: Leaf) -> np.ndarray:
    """Columns s, a, x2, y2, r."""
    return np.stack([leaf.s, leaf.a, leaf.x2, leaf.y2, leaf.r], axis=1)
