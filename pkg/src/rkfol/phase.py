"""Rotating Kepler problem in Cartesian phase space.

States are arrays with last axis (q1, q2, p1, p2). Most functions broadcast
over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

COLLISION_FLOOR = 1e-6


class CollisionError(ValueError):
    """Raised when a state or trajectory comes closer to the origin than the floor."""

    def __init__(self, radius, time=None):
        self.radius = float(radius)
        self.time = time
        msg = f"|q| = {self.radius:.3e} is below the collision floor"
        if time is not None:
            msg += f" (at t ~ {time:.6g})"
        super().__init__(msg)


class IntegratorError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhaseState:
    q1: float
    q2: float
    p1: float
    p2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.p1, self.p2], dtype=float)

    @classmethod
    def from_array(cls, z) -> "PhaseState":
        z = np.asarray(z, dtype=float)
        return cls(*map(float, z[:4]))


@dataclass(frozen=True)
class IntegralSet:
    H: float
    E: float
    L: float
    e: float
    has_real_e: bool


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    steps: int
    max_defect: float

    def integrals(self) -> np.ndarray:
        """Columns H, E, L along the trajectory."""
        H = hamiltonian(self.states)
        E, L = kepler_energy(self.states), angular_momentum(self.states)
        return np.stack([H, E, L], axis=-1)


def _as_states(z) -> np.ndarray:
    if isinstance(z, PhaseState):
        return z.as_array()
    return np.asarray(z, dtype=float)


def _radius(z, floor):
    r = np.hypot(z[..., 0], z[..., 1])
    if floor is not None and np.any(r < floor):
        raise CollisionError(np.min(r))
    return r


def radial_potential(r):
    """f(r) = -1/r - r^2/2, the effective potential bounding the Hill region."""
    r = np.asarray(r, dtype=float)
    return -1.0 / r - 0.5 * r**2


def kepler_energy(z, floor=COLLISION_FLOOR):
    z = _as_states(z)
    r = _radius(z, floor)
    return 0.5 * (z[..., 2] ** 2 + z[..., 3] ** 2) - 1.0 / r


def angular_momentum(z):
    z = _as_states(z)
    return z[..., 0] * z[..., 3] - z[..., 1] * z[..., 2]


def hamiltonian(z, floor=COLLISION_FLOOR):
    z = _as_states(z)
    q1, q2, p1, p2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    r = _radius(z, floor)
    return 0.5 * (p1**2 + p2**2) - 1.0 / r - p2 * q1 + p1 * q2


def hamiltonian_completed_square(z, floor=COLLISION_FLOOR):
    """Same value written as 1/2|p + (q2, -q1)|^2 + f(|q|)."""
    z = _as_states(z)
    q1, q2, p1, p2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    r = _radius(z, floor)
    return 0.5 * ((p1 + q2) ** 2 + (p2 - q1) ** 2) + radial_potential(r)


def integrals(z, floor=COLLISION_FLOOR) -> IntegralSet:
    z = _as_states(z)
    E = float(kepler_energy(z, floor))
    L = float(angular_momentum(z))
    e2 = 2.0 * E * L**2 + 1.0
    has_e = bool(e2 >= 0.0)
    e = float(np.sqrt(e2)) if has_e else float("nan")
    return IntegralSet(H=E - L, E=E, L=L, e=e, has_real_e=has_e)


def vector_field(z, floor=COLLISION_FLOOR):
    z = _as_states(z)
    q1, q2, p1, p2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    r3 = _radius(z, floor) ** 3
    return np.stack([p1 + q2, p2 - q1, -q1 / r3 + p2, -q2 / r3 - p1], axis=-1)


def kepler_vector_field(z, floor=COLLISION_FLOOR):
    """Hamiltonian vector field of E alone (inertial Kepler motion)."""
    z = _as_states(z)
    r3 = _radius(z, floor) ** 3
    return np.stack([z[..., 2], z[..., 3], -z[..., 0] / r3, -z[..., 1] / r3], axis=-1)


def rotate(z, theta):
    """Rotate positions and momenta by the same angle (cotangent lift)."""
    z = _as_states(z)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(np.broadcast_shapes(z.shape, np.shape(theta) + (4,)))
    out[..., 0] = c * z[..., 0] - s * z[..., 1]
    out[..., 1] = s * z[..., 0] + c * z[..., 1]
    out[..., 2] = c * z[..., 2] - s * z[..., 3]
    out[..., 3] = s * z[..., 2] + c * z[..., 3]
    return out


def reflection(z):
    """(q1, -q2, -p1, p2): reverses time and preserves the Hamiltonian.

    Not used by the constructions; kept as an independent check on the flow.
    """
    z = _as_states(z)
    return z * np.array([1.0, -1.0, -1.0, 1.0])


def _integrate(rhs, z0, t_final, tol, atol, t_eval, floor, method):
    def event(t, y):
        return np.min(np.hypot(y[0::4], y[1::4])) - floor

    event.terminal = True
    sol = solve_ivp(rhs, (0.0, t_final), z0, method=method, rtol=tol, atol=atol,
                    t_eval=t_eval, events=event, dense_output=False)
    if sol.status == 1:
        raise CollisionError(floor, time=float(sol.t_events[0][0]))
    if sol.status != 0:
        raise IntegratorError(sol.message)
    return sol


def flow(z0, t_final, tol=1e-10, atol=1e-12, n_out=201, method="RK45",
         floor=COLLISION_FLOOR) -> Trajectory:
    """Integrate the rotating-frame flow from z0 up to t_final."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    z0 = _as_states(z0)
    _radius(z0, floor)
    t_eval = np.linspace(0.0, t_final, n_out)
    sol = _integrate(lambda t, y: vector_field(y, None), z0, t_final, tol, atol,
                     t_eval, floor, method)
    states = sol.y.T
    ints = np.stack([hamiltonian(states), kepler_energy(states),
                     angular_momentum(states)], axis=-1)
    defect = float(np.max(np.abs(ints - ints[0])))
    return Trajectory(times=sol.t, states=states, steps=int(sol.nfev), max_defect=defect)


def flow_batch(Z0, t_final, tol=1e-10, atol=1e-12, n_out=51, method="RK45",
               floor=COLLISION_FLOOR, field=None):
    """Integrate many states as one stacked system.

    Returns (times, states) with states of shape (n_out, N, 4). The step
    controller measures the RMS error over all components, so the tolerances
    are divided by sqrt(4N) to keep the per-trajectory error at `tol`.
    """
    Z0 = np.atleast_2d(_as_states(Z0))
    _radius(Z0, floor)
    field = vector_field if field is None else field
    n = Z0.shape[0]

    def rhs(t, y):
        return field(y.reshape(n, 4), None).ravel()

    t_eval = np.linspace(0.0, t_final, n_out)
    scale = np.sqrt(Z0.size)
    sol = _integrate(rhs, Z0.ravel(), t_final, tol / scale, atol / scale, t_eval,
                     floor, method)
    return sol.t, sol.y.T.reshape(len(sol.t), n, 4)


def inertial_factorization_defect(z0, t_final, tol=1e-10, atol=1e-12, n_out=101,
                                  method="RK45") -> float:
    """Compare the rotating flow with the rotated inertial Kepler flow.

    Integrates both systems independently from the same initial condition;
    the rotating solution should equal exp(-it) applied to the inertial one.
    """
    z0 = np.atleast_2d(_as_states(z0))
    if t_final == 0:
        return 0.0
    t, rot = flow_batch(z0, t_final, tol, atol, n_out, method)
    _, ine = flow_batch(z0, t_final, tol, atol, n_out, method, field=kepler_vector_field)
    back = rotate(ine, -t[:, None])
    return float(np.max(np.abs(back - rot)))
