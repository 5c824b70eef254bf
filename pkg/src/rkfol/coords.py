"""Kepler elements, Delaunay and Poincare variables for planar bound Kepler orbits.

Angles follow the usual orbital-elements conventions:

* alpha: polar angle of the position,
* beta: argument of perihelion,
* mean anomaly M, with the conjugate pair (k, K) = (M, sqrt(a)).

The Poincare variables (eta, lambda, xi, Lambda) are stored as (x1, x2, y1, y2)
and are regular at circular orbits; they are computed from the eccentricity
vector without ever dividing by e.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase import angular_momentum, kepler_energy

TWO_PI = 2.0 * np.pi


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class KeplerElements:
    alpha: float
    beta: float
    a: float
    e: float


@dataclass(frozen=True)
class DelaunayState:
    l: float
    k: float
    L: float
    K: float


@dataclass(frozen=True)
class PoincareState:
    x1: float
    x2: float
    y1: float
    y2: float
    regime: str = "direct"

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.y1, self.y2])


def wrap(angle):
    """Map angles to [0, 2pi)."""
    return np.mod(angle, TWO_PI)


def wrap_diff(d):
    """Map angle differences to (-pi, pi]."""
    return -np.mod(-d + np.pi, TWO_PI) + np.pi


def _elements(Z):
    """Vectorized element extraction; returns a dict of arrays."""
    Z = np.asarray(Z, dtype=float)
    q1, q2, p1, p2 = (Z[..., i] for i in range(4))
    r = np.hypot(q1, q2)
    E = kepler_energy(Z)
    L = angular_momentum(Z)
    v2 = p1**2 + p2**2
    qp = q1 * p1 + q2 * p2
    ex = (v2 - 1.0 / r) * q1 - qp * p1
    ey = (v2 - 1.0 / r) * q2 - qp * p2
    e = np.hypot(ex, ey)
    alpha = np.arctan2(q2, q1)
    return dict(r=r, E=E, L=L, ex=ex, ey=ey, e=e, alpha=alpha)


def _check_domain(el, direct=True):
    E, L, e = el["E"], el["L"], el["e"]
    if np.any(E >= 0):
        raise DomainError(f"Kepler energy must be negative (E = {np.max(E):.6g} >= 0)")
    if direct and np.any(L <= 0):
        raise DomainError(f"angular momentum must be positive (L = {np.min(L):.6g} <= 0)")
    if not direct and np.any(L >= 0):
        raise DomainError(f"angular momentum must be negative (L = {np.max(L):.6g} >= 0)")
    if np.any(e >= 1):
        raise DomainError(f"eccentricity must be below 1 (e = {np.max(e):.6g})")


def _anomaly_shift(el):
    """Return (f - M) as a smooth function of the eccentricity vector.

    With b = e / (1 + sqrt(1 - e^2)) the eccentric anomaly is
    u = f - 2 atan(b sin f / (1 + b cos f)), and M = u - e sin u.
    """
    e, alpha = el["e"], el["alpha"]
    ca, sa = np.cos(alpha), np.sin(alpha)
    ecf = ca * el["ex"] + sa * el["ey"]     # e cos f
    esf = sa * el["ex"] - ca * el["ey"]     # e sin f
    w = np.sqrt(1.0 - e**2)
    u_minus_f = -2.0 * np.arctan2(esf / (1.0 + w), 1.0 + ecf / (1.0 + w))
    e_sin_u = w * esf / (1.0 + ecf)
    return -(u_minus_f - e_sin_u)


def kepler_map(z) -> KeplerElements:
    el = _elements(z)
    _check_domain(el)
    a = -1.0 / (2.0 * el["E"])
    e = float(el["e"])
    alpha = float(wrap(el["alpha"]))
    beta = alpha if e == 0.0 else float(wrap(np.arctan2(el["ey"], el["ex"])))
    return KeplerElements(alpha, beta, float(a), e)


def mean_anomaly(el: KeplerElements) -> float:
    f = el.alpha - el.beta
    e = el.e
    u = 2.0 * np.arctan2(np.sqrt(1 - e) * np.sin(f / 2), np.sqrt(1 + e) * np.cos(f / 2))
    return float(wrap(u - e * np.sin(u)))


def delaunay_map(el: KeplerElements, circular: bool = False) -> DelaunayState:
    if el.e == 0.0 and not circular:
        raise DomainError("argument of perihelion is undefined for a circular orbit")
    return DelaunayState(el.beta, mean_anomaly(el), float(np.sqrt(el.a * (1 - el.e**2))),
                         float(np.sqrt(el.a)))


def poincare_array(Z, true_anomaly: bool = False) -> np.ndarray:
    """Direct Poincare variables for an array of states (last axis 4).

    With true_anomaly=True the angle conjugate to K is taken to be the true
    anomaly alpha - beta, which makes lambda = alpha. That variant is not
    symplectic and serves as a negative control.
    """
    el = _elements(Z)
    _check_domain(el)
    K = 1.0 / np.sqrt(-2.0 * el["E"])
    s = np.sqrt(2.0 * K / (1.0 + np.sqrt(1.0 - el["e"] ** 2)))
    xi = s * el["ex"]
    eta = -s * el["ey"]
    lam = el["alpha"] if true_anomaly else el["alpha"] - _anomaly_shift(el)
    return np.stack([eta, wrap(lam), xi, K], axis=-1)


def poincare_map(z) -> PoincareState:
    x = poincare_array(z)
    return PoincareState(*map(float, x), regime="direct")


def _psi(Z):
    return np.asarray(Z, dtype=float) * np.array([1.0, 1.0, -1.0, -1.0])


def _phi(X):
    return np.asarray(X, dtype=float) * np.array([1.0, 1.0, -1.0, -1.0])


def retrograde_array(Z) -> np.ndarray:
    el = _elements(Z)
    _check_domain(el, direct=False)
    return _phi(poincare_array(_psi(Z)))


def retrograde_poincare(z) -> PoincareState:
    return PoincareState(*map(float, retrograde_array(z)), regime="retrograde")


def solve_kepler(M, e, tol=1e-15):
    """Eccentric anomaly u with u - e sin u = M (vectorized Newton)."""
    M = np.asarray(M, dtype=float)
    e = np.asarray(e, dtype=float)
    M = np.mod(M, TWO_PI)
    u = np.where(e < 0.8, M + e * np.sin(M), np.pi)
    for _ in range(60):
        du = (u - e * np.sin(u) - M) / (1.0 - e * np.cos(u))
        u = u - du
        if np.all(np.abs(du) < tol):
            break
    return u


def poincare_inverse_array(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    eta, lam, xi, Lam = (X[..., i] for i in range(4))
    if np.any(Lam <= 0):
        raise DomainError("Lambda must be positive")
    rho2 = eta**2 + xi**2
    L = Lam - 0.5 * rho2
    if np.any(L <= 0):
        raise DomainError("reconstructed angular momentum is not positive (e >= 1)")
    e = np.sqrt(np.maximum(1.0 - (L / Lam) ** 2, 0.0))
    a = Lam**2
    beta = np.where(rho2 > 0, np.arctan2(-eta, xi), 0.0)
    M = np.mod(lam - beta, TWO_PI)
    u = solve_kepler(M, e)
    w = np.sqrt(1.0 - e**2)
    f = np.arctan2(w * np.sin(u), np.cos(u) - e)
    r = a * (1.0 - e * np.cos(u))
    alpha = beta + f
    q1, q2 = r * np.cos(alpha), r * np.sin(alpha)
    # perifocal velocity (-sin f, e + cos f) / L rotated by beta
    vx, vy = -np.sin(f) / L, (e + np.cos(f)) / L
    cb, sb = np.cos(beta), np.sin(beta)
    p1, p2 = cb * vx - sb * vy, sb * vx + cb * vy
    return np.stack([q1, q2, p1, p2], axis=-1)


def retrograde_inverse_array(X) -> np.ndarray:
    return _psi(poincare_inverse_array(_phi(X)))


def poincare_inverse(ps: PoincareState) -> np.ndarray:
    x = ps.as_array()
    if ps.regime == "retrograde":
        return _psi(poincare_inverse_array(_phi(x)))
    return poincare_inverse_array(x)


# -- symplecticity -----------------------------------------------------------

def _delaunay_array(Z, true_anomaly=False):
    el = _elements(Z)
    _check_domain(el)
    beta = np.arctan2(el["ey"], el["ex"])
    k = el["alpha"] - beta if true_anomaly else el["alpha"] - beta - _anomaly_shift(el)
    a = -1.0 / (2.0 * el["E"])
    return np.stack([wrap(beta), wrap(k), np.sqrt(a * (1 - el["e"] ** 2)), np.sqrt(a)], axis=-1)


# name -> (map, indices of angle outputs, direct?)
MAPS = {
    "kepler": (lambda Z: _delaunay_array(Z, true_anomaly=True), (0, 1), True),
    "delaunay": (_delaunay_array, (0, 1), True),
    "poincare": (poincare_array, (1,), True),
    "poincare_retro": (retrograde_array, (1,), False),
    "poincare_true_anomaly": (lambda Z: poincare_array(Z, true_anomaly=True), (1,), True),
    "identity": (lambda Z: np.asarray(Z, dtype=float), (), None),
}

OMEGA = np.block([[np.zeros((2, 2)), -np.eye(2)], [np.eye(2), np.zeros((2, 2))]])


def _central(fn, angles, Z, h):
    J = np.empty(Z.shape[:-1] + (4, 4))
    for j in range(4):
        dz = np.zeros(4)
        dz[j] = h
        d = fn(Z + dz) - fn(Z - dz)
        for i in angles:
            d[..., i] = wrap_diff(d[..., i])
        J[..., :, j] = d / (2 * h)
    return J


def jacobian_fd(name, Z, h=1e-5, richardson=True):
    """Central-difference Jacobians of a named map at states Z, shape (..., 4, 4).

    One Richardson step combines steps h and h/2 to cancel the O(h^2) term.
    """
    fn, angles, _ = MAPS[name]
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    J = _central(fn, angles, Z, h)
    if richardson:
        J = (4.0 * _central(fn, angles, Z, h / 2) - J) / 3.0
    return J


def symplecticity_defect(name, Z, h=1e-5, delta=1e-3, richardson=True):
    """max |J^T Omega J - Omega| for the named map, one value per state."""
    _, _, direct = MAPS[name]
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if direct is not None:
        el = _elements(Z)
        L = el["L"] if direct else -el["L"]
        if np.any(el["e"] < delta) or np.any(el["e"] > 1 - delta) or np.any(L < delta):
            raise DomainError("state within the boundary margin of e in {0, 1} or L = 0")
    J = jacobian_fd(name, Z, h, richardson)
    D = np.swapaxes(J, -1, -2) @ OMEGA @ J - OMEGA
    return np.max(np.abs(D), axis=(-1, -2))


def sample_elements(n, rng, e_range=(0.0, 0.95), a_range=(0.5, 4.0), direct=True):
    """Random bound states built from (a, e, beta, M)."""
    a = rng.uniform(*a_range, n)
    e = rng.uniform(*e_range, n)
    beta = rng.uniform(0, TWO_PI, n)
    M = rng.uniform(0, TWO_PI, n)
    Lam = np.sqrt(a)
    L = Lam * np.sqrt(1 - e**2)
    rho = np.sqrt(2 * (Lam - L))
    X = np.stack([-rho * np.sin(beta), wrap(beta + M), rho * np.cos(beta), Lam], axis=-1)
    Z = poincare_inverse_array(X)
    return Z if direct else _psi(Z)
