"""Conley-Zehnder indices through a global frame of the contact structure.

At a point of the energy surface with gradient N = grad K the vectors
X_j = A_j N (j = 1, 2, 3) are pairwise orthogonal, all of length |N|, and X_3
is the Hamiltonian vector field. With kappa_ij = <Hess K X_i, X_j> the
transverse linearised flow in the frame (X_1, X_2) reads

    a' = (1/|N|^2) [[-k12, -k22 - k33], [k11 + k33, k12]] a  -  (m/|N|^2) a,

where m = <N, Hess K X_3>. The last term is a multiple of the identity and
does not affect arguments, so only the first part is integrated. The factor
1/|N|^2 is essential unless |N| is constant along the orbit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .periodic import OrbitRecord
from .stack import ModelHamiltonian

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
I2 = np.eye(2)
Z2 = np.zeros((2, 2))
A1 = np.block([[Z2, J2], [J2, Z2]])
A2 = np.block([[J2, Z2], [Z2, -J2]])
A3 = np.block([[Z2, I2], [-I2, Z2]])

EPS_SHIFT = 1e-6
DEGENERACY_TOL = 1e-6


class CZError(RuntimeError):
    pass


@dataclass
class FrameData:
    X: np.ndarray       # (3, 4): X1, X2, X3
    kappa: np.ndarray   # (3, 3)
    norm2: float


def frame(model: ModelHamiltonian, z) -> FrameData:
    z = np.asarray(z, dtype=float)
    N, H = model.grad_hess(z)
    n2 = float(N @ N)
    if n2 < 1e-24:
        raise CZError("frame undefined at a critical point")
    X = np.stack([A1 @ N, A2 @ N, A3 @ N])
    kappa = X @ H @ X.T
    return FrameData(X, kappa, n2)


def _kappa_batch(model, z):
    """kappa_ij and |N|^2 for a batch of points, shapes (..., 3, 3) and (...)."""
    N, H = model.grad_hess(z)
    X = np.stack([N @ A1.T, N @ A2.T, N @ A3.T], axis=-2)
    kappa = X @ H @ np.swapaxes(X, -1, -2)
    return kappa, np.sum(N * N, axis=-1)


def _kappa_scalar(model, z):
    """Closed form of (k11, k12, k22, k33, |N|^2) and the vector field at one point.

    Uses the split form of the model: Hess = diag(1, K_xx, 1, K_yy) plus K_xy.
    """
    x1, x2, y1, y2 = float(z[0]), float(z[1]), float(z[2]), float(z[3])
    _, kx, ky, kxx, kxy, kyy = model._h2_scalar(x2, y2)
    a, b, c, d = x1, kx, y1, ky

    def q(u, v):
        return (u[0] * v[0] + u[2] * v[2] + kxx * u[1] * v[1]
                + kxy * (u[1] * v[3] + u[3] * v[1]) + kyy * u[3] * v[3])

    X1 = (d, -c, b, -a)
    X2 = (b, -a, -d, c)
    X3 = (c, d, -a, -b)
    n2 = a * a + b * b + c * c + d * d
    return (q(X1, X1), q(X1, X2), q(X2, X2), q(X3, X3), n2), (c, d, -a, -b)


def transverse_matrix(kappa, n2, delta=0.0):
    """Coefficient matrix of the normalized 2x2 linearised flow."""
    k = kappa
    k11, k12, k22, k33 = k[..., 0, 0] + delta, k[..., 0, 1], k[..., 1, 1] + delta, k[..., 2, 2]
    M = np.stack([np.stack([-k12, -k22 - k33], -1), np.stack([k11 + k33, k12], -1)], -2)
    return M / np.asarray(n2)[..., None, None]


@dataclass
class RotationInterval:
    lo: float
    hi: float
    degenerate: bool
    monodromy: np.ndarray
    samples: np.ndarray
    consistency: float

    @property
    def width(self):
        return self.hi - self.lo


def _transport(model, orbit, n_init, delta, rtol, atol):
    n_init = int(n_init)
    th0 = np.linspace(0.0, 2 * np.pi, n_init, endpoint=False)

    def rhs(t, u):
        (k11, k12, k22, k33, n2), vf = _kappa_scalar(model, u[:4])
        m00, m01 = -k12 / n2, -(k22 + delta + k33) / n2
        m10, m11 = (k11 + delta + k33) / n2, k12 / n2
        p00, p01, p10, p11 = u[4], u[5], u[6], u[7]
        th = u[8:]
        c, s = np.cos(th), np.sin(th)
        dth = -s * (m00 * c + m01 * s) + c * (m10 * c + m11 * s)
        out = np.empty_like(u)
        out[:4] = vf
        out[4:8] = (m00 * p00 + m01 * p10, m00 * p01 + m01 * p11,
                    m10 * p00 + m11 * p10, m10 * p01 + m11 * p11)
        out[8:] = dth
        return out

    u0 = np.concatenate([orbit.initial, I2.ravel(), th0])
    sol = solve_ivp(rhs, (0.0, orbit.period_H), u0, method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise CZError(sol.message)
    uT = sol.y[:, -1]
    return th0, uT[4:8].reshape(2, 2), uT[8:] - th0, uT[:4]


def _extremal_angles(Phi):
    """Initial angles where d(Delta theta)/d(alpha0) = 0, i.e. |Phi u|^2 = det Phi."""
    d = np.linalg.det(Phi)
    S = Phi.T @ Phi - d * I2
    a, b, c = S[0, 0], S[0, 1], S[1, 1]
    # a cos^2 + 2 b cos sin + c sin^2 = 0
    if abs(c) > 1e-300:
        disc = b * b - a * c
        if disc < 0:
            return np.array([])
        ts = [(-b + np.sqrt(disc)) / c, (-b - np.sqrt(disc)) / c]
        angles = np.arctan(ts)
    elif abs(b) > 1e-300:
        angles = np.array([np.pi / 2, np.arctan(-a / (2 * b))])
    else:
        return np.array([])
    return np.concatenate([angles, angles + np.pi])


def rotation_interval(model: ModelHamiltonian, orbit: OrbitRecord, n_init: int = 256,
                      delta: float = 0.0, rtol: float = 1e-11, atol: float = 1e-12
                      ) -> RotationInterval:
    """Rotation interval of the transverse linearised flow along an orbit.

    Tracks n_init continuous arguments together with the fundamental matrix,
    then refines the extremes with the analytic critical angles of the map
    alpha0 -> arg(Phi u(alpha0)) - alpha0.
    """
    th0, Phi, dth, zT = _transport(model, orbit, n_init, delta, rtol, atol)

    def raw(alpha):
        v = Phi @ np.array([np.cos(alpha), np.sin(alpha)])
        return np.arctan2(v[1], v[0]) - alpha

    # tracked arguments vs monodromy, modulo 2 pi
    mism = [np.angle(np.exp(1j * (dth[k] - raw(th0[k])))) for k in range(len(th0))]
    consistency = float(np.max(np.abs(mism)))
    values = list(dth)
    for a in _extremal_angles(Phi):
        a = np.mod(a, 2 * np.pi)
        k = int(np.argmin(np.abs(np.angle(np.exp(1j * (th0 - a))))))
        jump = np.angle(np.exp(1j * (raw(a) - raw(th0[k]))))
        values.append(dth[k] + jump)
    values = np.asarray(values)
    lo, hi = float(values.min()), float(values.max())
    if hi - lo >= np.pi:
        raise CZError(f"rotation interval width {hi - lo:.6f} is not below pi")
    return RotationInterval(lo, hi, is_degenerate(lo, hi), Phi, values, consistency)


def is_degenerate(lo, hi, tol=DEGENERACY_TOL):
    def near(x):
        return abs(x - 2 * np.pi * np.round(x / (2 * np.pi))) < tol
    return bool(near(lo) or near(hi))


def cz_index(interval: RotationInterval, eps: float = EPS_SHIFT) -> int:
    """Index from the shifted interval I - eps.

    2k if 2k pi is interior to I - eps, otherwise 2k + 1 with
    I - eps inside (2k pi, 2(k+1) pi).
    """
    lo, hi = interval.lo - eps, interval.hi - eps
    k_lo = np.floor(lo / (2 * np.pi))
    k_hi = np.floor(hi / (2 * np.pi))
    if k_hi > k_lo:
        # some multiple of 2 pi lies in (lo, hi]; width < pi so there is one
        k = int(k_hi)
        if np.isclose(hi, 2 * np.pi * k, rtol=0, atol=1e-15):
            return 2 * k - 1
        return 2 * k
    return int(2 * k_lo + 1)


def variational_monodromy(model: ModelHamiltonian, orbit: OrbitRecord, rtol=1e-11, atol=1e-12):
    """Second route: integrate delta' = A3 Hess delta in R^4 and project on X1, X2."""
    z0 = orbit.initial
    fr = frame(model, z0)

    def rhs(t, u):
        z = u[:4]
        D = u[4:].reshape(4, 2)
        return np.concatenate([model.vector_field(z), (A3 @ model.hess(z) @ D).ravel()])

    D0 = fr.X[:2].T.copy()
    sol = solve_ivp(rhs, (0.0, orbit.period_H), np.concatenate([z0, D0.ravel()]),
                    method="DOP853", rtol=rtol, atol=atol)
    zT = sol.y[:4, -1]
    DT = sol.y[4:, -1].reshape(4, 2)
    frT = frame(model, zT)
    return (frT.X[:2] @ DT) / frT.norm2


def linearized_block(model: ModelHamiltonian, z):
    """Linearisation of the planar flow (x2, y2) at z: [[H_xy, H_yy], [-H_xx, -H_xy]]."""
    H = model.hess(z)
    return np.array([[H[1, 3], H[3, 3]], [-H[1, 1], -H[1, 3]]])


def orbit_index(model: ModelHamiltonian, orbit: OrbitRecord, n_init: int = 256,
                delta: float = 0.0):
    iv = rotation_interval(model, orbit, n_init=n_init, delta=delta)
    return cz_index(iv), iv
