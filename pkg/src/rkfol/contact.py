"""Liouville fields, the induced contact form, Reeb field and the involution rho.

Conventions (ordering x1, x2, y1, y2):

    omega0 = dy1 ^ dx1 + dy2 ^ dx2,
    X_H    = (H_y1, H_y2, -H_x1, -H_x2)     so that omega0(X_H, .) = -dH,
    lambda = omega0(Y, .)                   lambda(V) = Y_y . V_x - Y_x . V_y.

Hence lambda(X_H) = dH(Y) and transversality of Y is positivity of dH(Y).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.spatial import cKDTree

from .stack import FOUR_PI, TWO_PI, ModelHamiltonian, involution, step_jet

OMEGA0 = np.zeros((4, 4))
OMEGA0[2, 0], OMEGA0[0, 2] = 1.0, -1.0
OMEGA0[3, 1], OMEGA0[1, 3] = 1.0, -1.0

D_RHO = np.diag([-1.0, -1.0, 1.0, 1.0])


class TransversalityError(RuntimeError):
    pass


class LiouvilleField:
    """Liouville field adapted to a model stack.

    Lower and upper stacks: radial about (0, lam3) for x2 well below 2 pi,
    corrected near x2 = 2 pi by the Hamiltonian field of h * ell so that it
    becomes ρ-invariant, and extended to x2 > 2 pi by Y(p) = Drho Y(rho p).
    Appendix: (x1/2, 0, y1/2, y2 - lam3).
    """

    def __init__(self, model: ModelHamiltonian):
        self.model = model
        self.lam3 = model.params.lam3
        self.eps2 = model.params.eps2
        self.kind = "appendix" if model.periodic else "spliced"

    # pieces --------------------------------------------------------------
    def radial(self, z):
        z = np.asarray(z, dtype=float)
        out = 0.5 * z.copy()
        out[..., 3] = 0.5 * (z[..., 3] - self.lam3)
        return out

    def ell(self, x2, y2):
        """Generating function with X_ell = Y1 - Y0."""
        return (y2 - self.lam3) * (0.25 * np.sin(x2 / 2) - 0.5 * x2)

    def y1_field(self, z):
        z = np.asarray(z, dtype=float)
        x2, y2 = z[..., 1], z[..., 3]
        return np.stack([0.5 * z[..., 0], 0.25 * np.sin(x2 / 2), 0.5 * z[..., 2],
                         (y2 - self.lam3) * (1 - 0.125 * np.cos(x2 / 2))], axis=-1)

    def _h(self, x2):
        e = self.eps2
        return step_jet(x2, TWO_PI - 2 * e, TWO_PI - e, "x")

    def _left(self, z):
        """Y0 + X_{h ell}, valid for x2 <= 2 pi."""
        z = np.asarray(z, dtype=float)
        x2, y2 = z[..., 1], z[..., 3]
        d = y2 - self.lam3
        h = self._h(x2)
        ell = self.ell(x2, y2)
        ell_x = d * (0.125 * np.cos(x2 / 2) - 0.5)
        ell_y = 0.25 * np.sin(x2 / 2) - 0.5 * x2
        out = self.radial(z)
        out[..., 1] = out[..., 1] + h.v * ell_y
        out[..., 3] = out[..., 3] - (h.x * ell + h.v * ell_x)
        return out

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "appendix":
            out = 0.5 * z.copy()
            out[..., 1] = 0.0
            out[..., 3] = z[..., 3] - self.lam3
            return out
        left = self._left(z)
        right = self._left(involution(z)) @ D_RHO
        return np.where((z[..., 1] <= TWO_PI)[..., None], left, right)

    # derived forms -------------------------------------------------------
    def lam_coeffs(self, z):
        """Coefficients of lambda in the basis dx1, dx2, dy1, dy2."""
        Y = self(z)
        return np.stack([Y[..., 2], Y[..., 3], -Y[..., 0], -Y[..., 1]], axis=-1)

    def lam(self, z, v):
        return np.sum(self.lam_coeffs(z) * np.asarray(v), axis=-1)

    def transversality(self, z):
        """dH(Y) at the points z."""
        return np.sum(self.model.grad(z) * self(z), axis=-1)

    def reeb(self, z):
        X = self.model.vector_field(z)
        d = self.lam(z, X)
        if np.any(d <= 0):
            raise TransversalityError(f"lambda(X_H) = {np.min(d):.3e} is not positive")
        return X / d[..., None]


def assemble_liouville(model: ModelHamiltonian) -> LiouvilleField:
    return LiouvilleField(model)


def exterior_derivative(field: LiouvilleField, z, h=1e-5):
    """Matrix of d(lambda) at z by central differences with one Richardson step."""
    z = np.atleast_2d(np.asarray(z, dtype=float))

    def grads(hh):
        G = np.empty(z.shape[:-1] + (4, 4))  # G[..., i, j] = d_i lambda_j
        for i in range(4):
            dz = np.zeros(4)
            dz[i] = hh
            G[..., i, :] = (field.lam_coeffs(z + dz) - field.lam_coeffs(z - dz)) / (2 * hh)
        return G

    G = (4 * grads(h / 2) - grads(h)) / 3
    return G - np.swapaxes(G, -1, -2)


def liouville_defect(field: LiouvilleField, z, h=1e-5):
    """max |d(omega0(Y, .)) - omega0| per point."""
    D = exterior_derivative(field, z, h)
    return np.max(np.abs(D - OMEGA0), axis=(-1, -2))


@dataclass
class ScanReport:
    min: float
    argmin: list
    n: int
    seed: int

    def to_dict(self):
        return {"min": self.min, "argmin": self.argmin, "n": self.n, "seed": self.seed}


def transversality_scan(model: ModelHamiltonian, field: LiouvilleField, n_samples: int,
                        seed: int = 0, sampler=None) -> ScanReport:
    from .stack import SigmaSampler

    rng = np.random.default_rng(seed)
    sampler = SigmaSampler(model) if sampler is None else sampler
    Z = sampler.sample(n_samples, rng)
    vals = field.transversality(Z)
    i = int(np.argmin(vals))
    return ScanReport(float(vals[i]), [float(v) for v in Z[i]], int(n_samples), int(seed))


def rho_pullback_defect(field: LiouvilleField, z, v):
    """|lambda_{rho z}(Drho v) + lambda_z(v)|: zero when rho* lambda = -lambda."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.abs(field.lam(involution(z), v @ D_RHO) + field.lam(z, v))


def reeb_trace_distance(model, field, z0, t_final, n=200):
    """Compare the Hamiltonian flow with the Reeb flow, matched by Reeb time."""
    def ham(t, u):
        z = u[:4]
        X = model.vector_field(z)
        return np.concatenate([X, [field.lam(z, X)]])

    sol = solve_ivp(ham, (0, t_final), np.concatenate([z0, [0.0]]), method="DOP853",
                    rtol=1e-12, atol=1e-13, dense_output=True)
    tau_end = sol.y[4, -1]
    taus = np.linspace(0, tau_end, n)
    # invert the Reeb clock on the Hamiltonian solution
    ts = np.interp(taus, sol.y[4], sol.t)
    for _ in range(5):
        u = sol.sol(ts)
        rate = field.lam(u[:4].T, model.vector_field(u[:4].T))
        ts = ts - (u[4] - taus) / rate
    Zh = sol.sol(ts)[:4].T
    reeb = solve_ivp(lambda t, z: field.reeb(z), (0, tau_end), z0, method="DOP853",
                     rtol=1e-12, atol=1e-13, t_eval=taus)
    return float(np.max(np.abs(reeb.y.T - Zh)))


# -- orbits and the involution ----------------------------------------------

def reeb_period(field: LiouvilleField, orbit) -> float:
    """Action of an orbit: integral of lambda(X_H) dt over one period."""
    z = orbit.states
    vals = field.lam(z, field.model.vector_field(z))
    return float(_periodic_trapezoid(vals, orbit.times))


def _periodic_trapezoid(vals, t):
    return np.trapezoid(vals, t) if hasattr(np, "trapezoid") else np.trapz(vals, t)


def mirror_orbit(orbit):
    """P_rho(t) = rho(P(T - t))."""
    from .periodic import OrbitRecord

    T = orbit.period_H
    states = involution(orbit.states[::-1])
    times = T - orbit.times[::-1]
    return OrbitRecord(kind=orbit.kind + "_rho" if not orbit.kind.endswith("_rho")
                       else orbit.kind[:-4], times=times, states=states, period_H=T,
                       label=orbit.label)


def hausdorff(a, b):
    ta, tb = cKDTree(a), cKDTree(b)
    return max(ta.query(b)[0].max(), tb.query(a)[0].max())


def fixed_set_crossings(orbit, tol=1e-6):
    """Number of points of the orbit in Fix(rho) = {x1 = 0, x2 = 2 pi}."""
    z = orbit.states
    x1 = z[:, 0]
    n = 0
    # include the wrap-around segment of the closed loop
    for i in range(len(x1) - 1):
        a, b = x1[i], x1[i + 1]
        if a == 0 or a * b < 0:
            s = 0.0 if a == 0 else a / (a - b)
            x2 = z[i, 1] + s * (z[i + 1, 1] - z[i, 1])
            if abs(x2 - TWO_PI) < tol:
                n += 1
    return n


@dataclass
class InvolutionReport:
    mirror: object
    symmetric: bool
    distance: float
    fixed_points: int | None
    reeb_period: float
    reeb_period_mirror: float


def involution_suite(field: LiouvilleField, orbit, min_samples=64) -> InvolutionReport:
    if len(orbit.states) < min_samples:
        raise ValueError(f"orbit sampled with {len(orbit.states)} < {min_samples} points")
    m = mirror_orbit(orbit)
    d = hausdorff(orbit.states, m.states)
    # sampling resolution sets what distance can be resolved
    step = np.max(np.linalg.norm(np.diff(orbit.states, axis=0), axis=1))
    symmetric = d < max(1e-8, 0.5 * step) and d < 1e-3
    fp = fixed_set_crossings(orbit) if symmetric else None
    return InvolutionReport(m, bool(symmetric), float(d), fp, reeb_period(field, orbit),
                            reeb_period(field, m))

