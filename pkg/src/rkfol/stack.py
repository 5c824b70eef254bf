"""Interpolated model Hamiltonians in Poincare coordinates.

Points are (x1, x2, y1, y2). Every model has the split form

    H~ = 1/2 (x1^2 + y1^2) + H~2(x2, y2)

and all of the work is in the planar part H~2, which is assembled from smooth
steps. Three variants are provided:

``lower``     below the critical value; the Kepler part -1/(2 y2^2) - y2 is
              spliced into a pendulum-like well around y2 = lam3 and the
              x2-periodicity is broken by two quadratic caps, giving a
              model symmetric about x2 = 2 pi.
``upper``     above the critical value, in retrograde variables (y2 < 0);
              the model represents -H at level -c.
``appendix``  x2-independent splice of the Kepler part into a parabola.

Derivatives are analytic. A small jet class carries value, gradient and
Hessian through sums and products.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq
from scipy.special import expit

from .orbits import CRITICAL_VALUE, circular_orbits

FOUR_PI = 4.0 * np.pi
TWO_PI = 2.0 * np.pi


class ParameterError(ValueError):
    pass


# -- jets --------------------------------------------------------------------

class Jet:
    """Second-order jet of a function of (x2, y2)."""

    __slots__ = ("v", "x", "y", "xx", "xy", "yy")

    def __init__(self, v, x=0.0, y=0.0, xx=0.0, xy=0.0, yy=0.0):
        self.v, self.x, self.y, self.xx, self.xy, self.yy = v, x, y, xx, xy, yy

    def __add__(self, o):
        if not isinstance(o, Jet):
            return Jet(self.v + o, self.x, self.y, self.xx, self.xy, self.yy)
        return Jet(self.v + o.v, self.x + o.x, self.y + o.y,
                   self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.x, -self.y, -self.xx, -self.xy, -self.yy)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, Jet):
            return Jet(self.v * o, self.x * o, self.y * o, self.xx * o, self.xy * o, self.yy * o)
        return Jet(self.v * o.v,
                   self.x * o.v + self.v * o.x,
                   self.y * o.v + self.v * o.y,
                   self.xx * o.v + 2 * self.x * o.x + self.v * o.xx,
                   self.xy * o.v + self.x * o.y + self.y * o.x + self.v * o.xy,
                   self.yy * o.v + 2 * self.y * o.y + self.v * o.yy)

    __rmul__ = __mul__

    @property
    def grad(self):
        v = np.broadcast_arrays(self.v, self.x, self.y)
        return np.stack(v[1:], axis=-1)

    @property
    def hess(self):
        xx, xy, yy = np.broadcast_arrays(self.xx, self.xy, self.yy, self.v)[:3]
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)


def _smooth_step_scalar(t):
    # within 1e-3 of the ends s - {0, 1} and its derivatives are below exp(-990)
    if t <= 1e-3:
        return 0.0, 0.0, 0.0
    if t >= 1.0 - 1e-3:
        return 1.0, 0.0, 0.0
    phi = 1.0 / t - 1.0 / (1.0 - t)
    s = 1.0 / (1.0 + math.exp(phi)) if phi < 700 else 0.0
    w = s * (1.0 - s)
    dphi = -1.0 / t**2 - 1.0 / (1.0 - t) ** 2
    ddphi = 2.0 / t**3 - 2.0 / (1.0 - t) ** 3
    d1 = -w * dphi
    d2 = -(d1 * (1.0 - 2.0 * s)) * dphi - w * ddphi
    if not (math.isfinite(d1) and math.isfinite(d2)):
        return s, 0.0, 0.0
    return s, d1, d2


def _step_tuple(u, a, b):
    k = 1.0 / (b - a)
    s, d1, d2 = _smooth_step_scalar((u - a) * k)
    return s, d1 * k, d2 * k * k


def _cap_tuple(x, dy, x0):
    dx = x - x0
    return (0.5 * (dx * dx + dy * dy), dx, dy, 1.0, 0.0, 1.0)


def _blend_x(A, B, s):
    """Jet of A + s (B - A) for a step s = (v, s', s'') in x."""
    sv, s1, s2 = s
    D = [b - a for a, b in zip(A, B)]
    return (A[0] + sv * D[0],
            A[1] + sv * D[1] + s1 * D[0],
            A[2] + sv * D[2],
            A[3] + sv * D[3] + 2.0 * s1 * D[1] + s2 * D[0],
            A[4] + sv * D[4] + s1 * D[2],
            A[5] + sv * D[5])


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1. Returns (s, s', s'')."""
    if np.ndim(t) == 0:
        return _smooth_step_scalar(float(t))
    t = np.asarray(t, dtype=float)
    # same band as the scalar path; outside it the step is flat to double precision
    inside = (t > 1e-3) & (t < 1.0 - 1e-3)
    tc = np.clip(t, 1e-3, 1.0 - 1e-3)
    phi = 1.0 / tc - 1.0 / (1.0 - tc)
    s = np.where(inside, expit(-phi), (t >= 1.0 - 1e-3).astype(float))
    with np.errstate(over="ignore", invalid="ignore"):
        dphi = -1.0 / tc**2 - 1.0 / (1.0 - tc) ** 2
        ddphi = 2.0 / tc**3 - 2.0 / (1.0 - tc) ** 3
        w = s * (1.0 - s)
        d1 = -w * dphi
        d2 = -(d1 * (1.0 - 2.0 * s)) * dphi - w * ddphi
    d1 = np.where(inside & np.isfinite(d1), d1, 0.0)
    d2 = np.where(inside & np.isfinite(d2), d2, 0.0)
    return s, d1, d2


def step_jet(u, a, b, axis):
    """Jet of the step that is 0 at u = a and 1 at u = b (either order)."""
    s, d1, d2 = smooth_step((u - a) / (b - a))
    k = 1.0 / (b - a)
    if axis == "x":
        return Jet(s, x=d1 * k, xx=d2 * k * k)
    return Jet(s, y=d1 * k, yy=d2 * k * k)


def kepler_part(y):
    """-1/(2 y^2) - y and its derivatives (the unmodified H2)."""
    return Jet(-0.5 / y**2 - y, y=1.0 / y**3 - 1.0, yy=-3.0 / y**4)


def well(x, y, centre, const):
    """1/2 (y - centre)^2 - cos(x/2) + const."""
    cx, sx = np.cos(x / 2), np.sin(x / 2)
    return Jet(0.5 * (y - centre) ** 2 - cx + const,
               x=0.5 * sx, y=y - centre, xx=0.25 * cx, yy=_ones(y))


def cap(x, y, x0, centre):
    """1/2 (x - x0)^2 + 1/2 (y - centre)^2."""
    one = _ones(x * y)
    return Jet(0.5 * (x - x0) ** 2 + 0.5 * (y - centre) ** 2, x=x - x0, y=y - centre,
               xx=one, yy=one)


def parabola(y, centre, const):
    return Jet(0.5 * (y - centre) ** 2 + const, y=y - centre, yy=_ones(y))


def _ones(a):
    return 1.0 if np.ndim(a) == 0 else np.ones_like(a)


# -- parameters --------------------------------------------------------------

@dataclass(frozen=True)
class StackParams:
    """Parameters of a model stack.

    For the ``upper`` regime, lam3 and B play the roles of nu3 and D, and
    lam1, lam2 are negative.
    """
    regime: str
    c: float
    E0: float
    lam3: float
    eps0: float
    B: float
    eps1: float = 0.2
    eps2: float = 0.2

    @property
    def lam1(self) -> float:
        cs = circular_orbits(self.c)
        if self.regime == "upper":
            return -(-2.0 * cs.get("retro_u").E) ** -0.5
        return (-2.0 * cs.get("direct_u").E) ** -0.5

    @property
    def lam2(self) -> float:
        v = (-2.0 * self.E0) ** -0.5
        return -v if self.regime == "upper" else v

    def to_dict(self):
        return asdict(self)


SCENARIO_R = StackParams(regime="lower", c=-2.0, E0=-0.1, lam3=3.0, eps0=0.3, B=-4.0,
                         eps1=0.2, eps2=0.2)
SCENARIO_APPENDIX = replace(SCENARIO_R, regime="appendix")
# retrograde scenario above the critical value
SCENARIO_UPPER = StackParams(regime="upper", c=-1.0, E0=-1.2, lam3=-1.6, eps0=0.2, B=-2.0,
                             eps1=0.2, eps2=0.2)

SCENARIOS = {"R": SCENARIO_R, "appendix": SCENARIO_APPENDIX, "upper": SCENARIO_UPPER}


def lower_bound_B(p: StackParams, y=None) -> float:
    """Right-hand side of the strict upper bound on B, evaluated at y = lam2 + eps0."""
    y = p.lam2 + p.eps0 if y is None else y
    return -0.5 / y**2 - y - 0.5 * (y - p.lam3) ** 2 - 1.0


def upper_bound_D(p: StackParams, y=None) -> float:
    y = p.lam2 - p.eps0 if y is None else y
    return min(0.0, 0.5 / y**2 + y - 0.5 * (y - p.lam3) ** 2 - 1.0)


def validate(p: StackParams) -> None:
    """Raise ParameterError naming the first violated inequality."""
    if p.eps1 <= 0 or p.eps2 <= 0 or p.eps0 <= 0:
        raise ParameterError("eps0, eps1, eps2 must be positive")
    if p.eps2 >= np.pi / 2:
        raise ParameterError("eps2 must be below pi/2 so the h-splice stays near x2 = 2 pi")
    if p.regime in ("lower", "appendix"):
        if not p.c < CRITICAL_VALUE:
            raise ParameterError(f"c = {p.c} must be below -3/2")
        Ed = circular_orbits(p.c).get("direct_u").E
        if not Ed < p.E0 < 0:
            raise ParameterError(f"E0 = {p.E0} must lie in (E_direct_u = {Ed:.6g}, 0)")
        if not p.lam3 > p.lam2:
            raise ParameterError(f"lam3 = {p.lam3} must exceed lam2 = {p.lam2:.6g}")
        if not p.eps0 < 0.5 * (p.lam3 - p.lam2):
            raise ParameterError(f"eps0 = {p.eps0} must be below (lam3 - lam2)/2 = "
                                 f"{0.5 * (p.lam3 - p.lam2):.6g}")
        bound = lower_bound_B(p)
        if not p.B < bound:
            raise ParameterError(f"B fails the interpolation bound B < {bound:.6g} "
                                 f"by delta = {p.B - bound:.3e}")
    elif p.regime == "upper":
        if not CRITICAL_VALUE < p.c < 0:
            raise ParameterError(f"c = {p.c} must lie in (-3/2, 0)")
        Er = circular_orbits(p.c).get("retro_u").E
        if not Er < p.E0 < p.c:
            raise ParameterError(f"E0 = {p.E0} must lie in (E_retro_u = {Er:.6g}, c = {p.c})")
        if not p.lam3 < p.lam2:
            raise ParameterError(f"nu3 = {p.lam3} must be below nu2 = {p.lam2:.6g}")
        if not p.eps0 < 0.5 * (p.lam2 - p.lam3):
            raise ParameterError(f"eps0 = {p.eps0} must be below (nu2 - nu3)/2 = "
                                 f"{0.5 * (p.lam2 - p.lam3):.6g}")
        bound = upper_bound_D(p)
        if not p.B < bound:
            raise ParameterError(f"D fails the interpolation bound D < {bound:.6g} "
                                 f"by delta = {p.B - bound:.3e}")
    else:
        raise ParameterError(f"unknown regime {p.regime!r}")


# -- the model ---------------------------------------------------------------

def _coerce(x, y):
    """Python floats for scalar input (fast path), float arrays otherwise."""
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return float(x), float(y)
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


class ModelHamiltonian:
    """Evaluator bundle for one stack. Immutable after construction."""

    def __init__(self, params: StackParams):
        self.params = params
        self.regime = params.regime
        p = params
        self.lam1, self.lam2, self.lam3 = p.lam1, p.lam2, p.lam3
        # level of H~ that plays the role of the energy surface
        self.level = -p.c if self.regime == "upper" else p.c
        self.periodic = self.regime == "appendix"

    # planar pieces --------------------------------------------------------
    def _f(self, y):
        p = self.params
        if self.regime == "upper":
            return step_jet(y, p.lam2 - p.eps0, p.lam2 - 2 * p.eps0, "y")
        return step_jet(y, p.lam2 + p.eps0, p.lam2 + 2 * p.eps0, "y")

    def _g(self, x):
        e1 = self.params.eps1
        return step_jet(x, -2 * e1, -e1, "x")

    def _gt(self, x):
        e1 = self.params.eps1
        return step_jet(x, FOUR_PI + 2 * e1, FOUR_PI + e1, "x")

    def unmodified(self, x, y):
        k = kepler_part(y)
        k = Jet(k.v + 0 * x, k.x, k.y, k.xx, k.xy, k.yy)
        return -k if self.regime == "upper" else k

    def periodic_part(self, x, y):
        """K (lower) or V (upper) on the 4pi-periodic strip; Appendix: H^2."""
        p = self.params
        x, y = _coerce(x, y)
        f = self._f(y)
        if self.regime == "appendix":
            inner = parabola(y, p.lam3, p.B)
        else:
            inner = well(x, y, p.lam3, p.B)
        return (1.0 - f) * self.unmodified(x, y) + f * inner

    def h2_jet(self, x, y) -> Jet:
        x, y = _coerce(x, y)
        if type(x) is float:
            return Jet(*self._h2_scalar(x, y))
        K = self.periodic_part(x, y)
        if self.periodic:
            return K
        lam3 = self.params.lam3
        g, gt = self._g(x), self._gt(x)
        inner = (1.0 - gt) * cap(x, y, FOUR_PI, lam3) + gt * K
        return (1.0 - g) * cap(x, y, 0.0, lam3) + g * inner

    def h2(self, x, y):
        return self.h2_jet(x, y).v

    def _h2_scalar(self, x, y):
        """Same jet as h2_jet with plain floats and tuples (hot path of the ODEs)."""
        p = self.params
        lam3 = p.lam3
        if self.regime == "upper":
            f = _step_tuple(y, p.lam2 - p.eps0, p.lam2 - 2 * p.eps0)
            sg = -1.0
        else:
            f = _step_tuple(y, p.lam2 + p.eps0, p.lam2 + 2 * p.eps0)
            sg = 1.0
        # jets are (v, x, y, xx, xy, yy); f depends on y only
        y2 = y * y
        U = (sg * (-0.5 / y2 - y), 0.0, sg * (1.0 / (y2 * y) - 1.0), 0.0, 0.0,
             sg * (-3.0 / (y2 * y2)))
        dy = y - lam3
        if self.regime == "appendix":
            W = (0.5 * dy * dy + p.B, 0.0, dy, 0.0, 0.0, 1.0)
        else:
            cx, sx = math.cos(0.5 * x), math.sin(0.5 * x)
            W = (0.5 * dy * dy - cx + p.B, 0.5 * sx, dy, 0.25 * cx, 0.0, 1.0)
        fv, fy, fyy = f
        # K = U + f (W - U)
        D = tuple(w - u for w, u in zip(W, U))
        K = (U[0] + fv * D[0],
             U[1] + fv * D[1],
             U[2] + fv * D[2] + fy * D[0],
             U[3] + fv * D[3],
             U[4] + fv * D[4] + fy * D[1],
             U[5] + fv * D[5] + 2.0 * fy * D[2] + fyy * D[0])
        if self.periodic:
            return K
        e1 = p.eps1
        g = _step_tuple(x, -2 * e1, -e1)
        gt = _step_tuple(x, FOUR_PI + 2 * e1, FOUR_PI + e1)
        C4 = _cap_tuple(x, dy, FOUR_PI)
        inner = _blend_x(C4, K, gt)
        return _blend_x(_cap_tuple(x, dy, 0.0), inner, g)

    # four-dimensional ------------------------------------------------------
    def value(self, z):
        z = np.asarray(z, dtype=float)
        return 0.5 * (z[..., 0] ** 2 + z[..., 2] ** 2) + self.h2(z[..., 1], z[..., 3])

    def grad(self, z):
        z = np.asarray(z, dtype=float)
        return self._grad(z, self.h2_jet(z[..., 1], z[..., 3]))

    def hess(self, z):
        z = np.asarray(z, dtype=float)
        return self._hess(z, self.h2_jet(z[..., 1], z[..., 3]))

    def grad_hess(self, z):
        """Gradient and Hessian from a single jet evaluation."""
        z = np.asarray(z, dtype=float)
        j = self.h2_jet(z[..., 1], z[..., 3])
        return self._grad(z, j), self._hess(z, j)

    @staticmethod
    def _grad(z, j):
        if z.ndim == 1:
            return np.array([z[0], j.x, z[2], j.y], dtype=float)
        x = np.broadcast_arrays(z[..., 0], j.x, j.y)
        return np.stack([x[0], x[1], z[..., 2] + 0 * x[1], x[2]], axis=-1)

    @staticmethod
    def _hess(z, j):
        h = np.zeros(z.shape[:-1] + (4, 4))
        h[..., 0, 0] = 1.0
        h[..., 2, 2] = 1.0
        h[..., 1, 1] = j.xx
        h[..., 1, 3] = j.xy
        h[..., 3, 1] = j.xy
        h[..., 3, 3] = j.yy
        return h

    def eval(self, z):
        g, h = self.grad_hess(z)
        return self.value(z), g, h

    def vector_field(self, z):
        """X = (H_y1, H_y2, -H_x1, -H_x2) for the ordering (x1, x2, y1, y2)."""
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            _, jx, jy, _, _, _ = self._h2_scalar(float(z[1]), float(z[3]))
            return np.array([z[2], jy, -z[0], -jx])
        g = self.grad(z)
        return np.stack([g[..., 2], g[..., 3], -g[..., 0], -g[..., 1]], axis=-1)

    # derived quantities ----------------------------------------------------
    @property
    def radii(self):
        """Radii r2 < r3 of the (x1, y1)-circles of the binding orbits at the
        saddle line and at the wells."""
        p = self.params
        lev = self.level
        return np.sqrt(2 * (lev - 1 - p.B)), np.sqrt(2 * (lev + 1 - p.B))

    def lambda_max(self, x2=0.0) -> float:
        """Root y2 beyond lam3 of the periodic part at the given x2 (level set edge)."""
        lam3, lev = self.params.lam3, self.level
        sgn = -1.0 if self.regime == "upper" else 1.0

        def fn(y):
            return float(self.periodic_part(x2, y).v) - lev

        hi = lam3 + sgn * 1.0
        while fn(hi) < 0:
            hi = lam3 + 2 * (hi - lam3)
        root = brentq(fn, lam3, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return float(root)

    def critical_points(self, nx=48, ny=24, tol=1e-11):
        return critical_points(self, nx, ny, tol)

    def rho(self, z):
        return involution(z)


def involution(z):
    """(x1, x2, y1, y2) -> (-x1, 4pi - x2, y1, y2)."""
    z = np.asarray(z, dtype=float)
    out = z.copy()
    out[..., 0] = -z[..., 0]
    out[..., 1] = FOUR_PI - z[..., 1]
    return out


def build_stack(params: StackParams, check: bool = True) -> ModelHamiltonian:
    if check:
        validate(params)
    return ModelHamiltonian(params)


# -- critical points ---------------------------------------------------------

@dataclass
class CriticalPoint:
    x2: float
    y2: float
    value: float
    morse_index: int
    kind: str


@dataclass
class CriticalPointReport:
    points: list
    degenerate: list
    seeds: int
    converged: int
    max_residual: float


def critical_points(model: ModelHamiltonian, nx=48, ny=24, tol=1e-11):
    """Grid-seeded Newton search for critical points of H~2.

    Nondegenerate points are returned in ``points``; seeds converging to
    degenerate critical points (det Hess ~ 0) are collected in ``degenerate``.
    """
    p = model.params
    if model.periodic:
        return _critical_lines(model)
    if model.regime == "upper":
        xs = np.linspace(-3 * p.eps1, FOUR_PI + 3 * p.eps1, nx)
        ylo, yhi = p.lam3 - 3, -0.2
    else:
        xs = np.linspace(-3 * p.eps1, FOUR_PI + 3 * p.eps1, nx)
        ylo, yhi = 0.5, p.lam3 + 3
    ys = np.linspace(ylo, yhi, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    x, y = X.ravel().copy(), Y.ravel().copy()
    nseeds = x.size
    for _ in range(100):
        j = model.h2_jet(x, y)
        det = j.xx * j.yy - j.xy**2
        ok = np.abs(det) > 1e-14
        safe = np.where(ok, det, 1.0)
        dx = np.where(ok, (j.yy * j.x - j.xy * j.y) / safe, 0.0)
        dy = np.where(ok, (-j.xy * j.x + j.xx * j.y) / safe, 0.0)
        # damp large steps and keep y away from the Kepler singularity
        n = np.hypot(dx, dy)
        fac = np.minimum(1.0, 0.5 / np.maximum(n, 1e-300))
        x = x - fac * dx
        y = y - fac * dy
        if model.regime == "upper":
            y = np.minimum(y, -0.05)
        else:
            y = np.maximum(y, 0.05)
    j = model.h2_jet(x, y)
    res = np.hypot(j.x, j.y)
    conv = res < tol
    found, degen = [], []
    for xi, yi in zip(x[conv], y[conv]):
        h = model.h2_jet(xi, yi)
        H = np.array([[h.xx, h.xy], [h.xy, h.yy]], dtype=float)
        ev = np.linalg.eigvalsh(H)
        entry = (float(xi), float(yi), float(h.v), ev)
        if np.min(np.abs(ev)) < 1e-8:
            degen.append(entry)
        else:
            found.append(entry)
    pts = _dedupe(found)
    out = []
    for xi, yi, v, ev in sorted(pts, key=lambda e: (e[0], e[1])):
        idx = int(np.sum(ev < 0))
        kind = {0: "minimum", 1: "saddle", 2: "maximum"}[idx]
        out.append(CriticalPoint(xi, yi, v, idx, kind))
    deg = [CriticalPoint(xi, yi, v, int(np.sum(ev < -1e-8)), "degenerate")
           for xi, yi, v, ev in _dedupe(degen, tol=1e-3)]
    return CriticalPointReport(out, deg, nseeds, int(conv.sum()),
                               float(np.max(res[conv])) if conv.any() else float("nan"))


def _critical_lines(model, ny=200, tol=1e-11):
    """x2-independent model: Newton in y2 alone; each root is a critical line."""
    p = model.params
    y = np.linspace(0.5, p.lam3 + 3, ny)
    for _ in range(100):
        j = model.h2_jet(0.0, y)
        step = np.where(np.abs(j.yy) > 1e-14, j.y / np.where(j.yy == 0, 1.0, j.yy), 0.0)
        y = np.maximum(y - np.clip(step, -0.5, 0.5), 0.05)
    j = model.h2_jet(0.0, y)
    conv = np.abs(j.y) < tol
    pts, deg = [], []
    for yi in np.unique(np.round(y[conv], 9)):
        h = model.h2_jet(0.0, yi)
        if abs(h.yy) < 1e-8:
            deg.append(CriticalPoint(float("nan"), float(yi), float(h.v), 0, "degenerate line"))
        else:
            kind = "minimum line" if h.yy > 0 else "maximum line"
            pts.append(CriticalPoint(float("nan"), float(yi), float(h.v), int(h.yy < 0), kind))
    res = float(np.max(np.abs(j.y[conv]))) if conv.any() else float("nan")
    return CriticalPointReport(pts, deg, ny, int(conv.sum()), res)


def _dedupe(entries, tol=1e-7):
    out = []
    for e in entries:
        if not any(abs(e[0] - o[0]) < tol and abs(e[1] - o[1]) < tol for o in out):
            out.append(e)
    return out


# -- certificates and sampling -----------------------------------------------

@dataclass
class SignReport:
    n_points: int
    below_ok: bool
    above_ok: bool
    row_max: float
    worst_below: tuple
    worst_above: tuple


def sign_certificates(model: ModelHamiltonian, n=512):
    """Check the sign pattern of d(periodic part)/dy2 on an n x n grid.

    Lower stack: negative between lam1 - margin and lam3, positive above lam3
    up to lambda_max(0) + 1. The margin is half the gap between lam1 and 1.
    Also returns the largest |d/dy2| on the row y2 = lam3.
    """
    p = model.params
    lam1, lam3 = model.lam1, p.lam3
    if model.regime == "upper":
        margin = 0.25 * abs(lam1)
        ylo, yhi = model.lambda_max(0.0) - 1.0, lam1 + margin
    else:
        margin = 0.5 * (lam1 - 1.0)
        ylo, yhi = lam1 - margin, model.lambda_max(0.0) + 1.0
    xs = np.linspace(0.0, FOUR_PI, n)
    ys = np.linspace(ylo, yhi, n)
    ys = ys[np.abs(ys - lam3) > 1e-9]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Ky = model.periodic_part(X, Y).y
    sgn = -1.0 if model.regime == "upper" else 1.0
    below = sgn * (Y - lam3) < 0  # between the circular orbit and lam3
    vb = sgn * Ky[below]
    va = sgn * Ky[~below]
    ib, ia = np.argmax(vb), np.argmin(va)
    row = model.periodic_part(xs, np.full_like(xs, lam3)).y
    return SignReport(int(X.size), bool(np.all(vb < 0)), bool(np.all(va > 0)),
                      float(np.max(np.abs(row))),
                      (float(X[below][ib]), float(Y[below][ib]), float(vb[ib])),
                      (float(X[~below][ia]), float(Y[~below][ia]), float(va[ia])))


class SigmaSampler:
    """Samples of the energy-surface component that contains the binding orbits.

    The planar sublevel set {H~2 <= level} is rasterised and labelled; the
    component containing the saddle line (or y2 = lam3 in the appendix model)
    is kept. Each accepted planar point (x2, y2) is lifted to the surface by
    putting (x1, y1) on the circle of radius sqrt(2 (level - H~2)), which is
    the exact projection onto H~ = level along the (x1, y1)-radial direction.
    """

    def __init__(self, model: ModelHamiltonian, resolution=0.01):
        self.model = model
        p = model.params
        if model.periodic:
            xlo, xhi = 0.0, TWO_PI
            xc = np.pi
        else:
            # with a positive level the quadratic caps reach the level set
            pad = np.sqrt(2 * model.level) + 0.1 if model.level > 0 else 0.0
            xlo = -max(3 * p.eps1, pad)
            xhi = FOUR_PI - xlo
            xc = TWO_PI
        if model.regime == "upper":
            ylo, yhi = model.lambda_max(0.0) - 0.5, -0.02
        else:
            ylo, yhi = 0.2, model.lambda_max(0.0) + 0.5
        self.box = (xlo, xhi, ylo, yhi)
        nx = int(np.ceil((xhi - xlo) / resolution)) + 1
        ny = int(np.ceil((yhi - ylo) / resolution)) + 1
        self.xs = np.linspace(xlo, xhi, nx)
        self.ys = np.linspace(ylo, yhi, ny)
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        sub = model.h2(X, Y) <= model.level
        labels, _ = ndimage.label(sub)
        ic = np.argmin(np.abs(self.xs - xc))
        jc = np.argmin(np.abs(self.ys - p.lam3))
        lab = labels[ic, jc]
        if lab == 0:
            raise RuntimeError("binding region is not inside the sublevel set")
        self.mask = ndimage.binary_dilation(labels == lab, iterations=2)
        self.other_components = int(labels.max()) - 1

    def _in_component(self, x, y):
        i = np.clip(np.rint((x - self.xs[0]) / (self.xs[1] - self.xs[0])).astype(int),
                    0, len(self.xs) - 1)
        j = np.clip(np.rint((y - self.ys[0]) / (self.ys[1] - self.ys[0])).astype(int),
                    0, len(self.ys) - 1)
        return self.mask[i, j]

    def sample(self, n, rng):
        xlo, xhi, ylo, yhi = self.box
        out = []
        got = 0
        while got < n:
            m = max(4 * (n - got), 1024)
            x = rng.uniform(xlo, xhi, m)
            y = rng.uniform(ylo, yhi, m)
            h = self.model.h2(x, y)
            keep = (h <= self.model.level) & self._in_component(x, y)
            x, y, h = x[keep], y[keep], h[keep]
            th = rng.uniform(0, TWO_PI, x.size)
            r = np.sqrt(2 * (self.model.level - h))
            out.append(np.stack([r * np.cos(th), x, r * np.sin(th), y], axis=-1))
            got += x.size
        return np.concatenate(out)[:n]
