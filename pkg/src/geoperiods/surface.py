"""Model surfaces: metrics, geodesic flow, distances, deck transformations.

Four chart models are supported:

* ``FlatTorus(L1, L2)`` -- the quotient R^2/(L1 Z x L2 Z) with the Euclidean
  metric.  Operations take a ``lifted`` flag: lifted points live on the
  universal cover R^2 and are never reduced.
* ``HyperbolicPlane(a)`` -- upper half-plane {x2 > 0} carrying the constant
  curvature K = -a^2 metric (1/(a*x2))^2 * I.  Geodesics, distances and the
  two-point problem are closed form.
* ``ConformalSurface(field, rect)`` -- metric e^{2u}(dx^2 + dy^2) on an open
  rectangle; geodesics by adaptive Runge-Kutta, distances by angle shooting.
* ``RoundSphere(R)`` -- comparison model only; curvature is positive, so the
  admissibility and phase layers refuse it.

Points are stored in chart coordinates.  Tangent vectors carry their base
point; "unit" always means unit with respect to the surface metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    ConvergenceError,
    DomainError,
    EscapeError,
    UnsupportedSurfaceError,
)


@dataclass(frozen=True)
class SurfacePoint:
    """A point in the chart of some surface."""

    x1: float
    x2: float

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.x1, self.x2])

    def as_complex(self) -> complex:
        return complex(self.x1, self.x2)


@dataclass(frozen=True)
class TangentVec:
    """A tangent vector with chart components ``(v1, v2)`` at ``base``."""

    base: SurfacePoint
    v1: float
    v2: float

    @property
    def components(self) -> np.ndarray:
        return np.array([self.v1, self.v2])

    def as_complex(self) -> complex:
        return complex(self.v1, self.v2)


# ---------------------------------------------------------------------------
# Moebius transformations of the upper half-plane (real 2x2, det = 1)


@dataclass(frozen=True)
class _Mobius:
    a: float
    b: float
    c: float
    d: float

    def apply(self, z: complex) -> complex:
        return (self.a * z + self.b) / (self.c * z + self.d)

    def deriv(self, z: complex) -> complex:
        w = self.c * z + self.d
        return 1.0 / (w * w)

    def inv(self) -> "_Mobius":
        return _Mobius(self.d, -self.b, -self.c, self.a)

    def compose(self, other: "_Mobius") -> "_Mobius":
        # self after other
        return _Mobius(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )


def _frame_to_i(p: SurfacePoint) -> _Mobius:
    """Unit-determinant Moebius map sending p to i (no rotation)."""
    s = math.sqrt(p.x2)
    # z -> (z - x1)/x2 realized as scale(1/x2) after translate(-x1)
    scale = _Mobius(1.0 / s, 0.0, 0.0, s)
    trans = _Mobius(1.0, -p.x1, 0.0, 1.0)
    return scale.compose(trans)


def _rotation_about_i(psi: float) -> _Mobius:
    # Elliptic element fixing i; rotates tangent vectors at i by +psi.
    c, s = math.cos(psi / 2.0), math.sin(psi / 2.0)
    return _Mobius(c, s, -s, c)


def _std_direction_between(z: complex, w: complex, at_start: bool) -> complex:
    """Standard-metric unit tangent of the geodesic z -> w, at z or at w.

    Works entirely in the upper half-plane model with K = -1.
    """
    dx = w.real - z.real
    chord = abs(z - w)
    if abs(dx) < 1e-15 * chord:
        sgn = 1.0 if w.imag > z.imag else -1.0
        zz = z if at_start else w
        return complex(0.0, sgn * zz.imag)
    # geodesic is the half-circle centered on the real axis through z, w
    c = (abs(w) ** 2 - abs(z) ** 2) / (2.0 * dx)
    phi_z = math.atan2(z.imag, z.real - c)
    phi_w = math.atan2(w.imag, w.real - c)
    sgn = 1.0 if phi_w > phi_z else -1.0
    zz = z if at_start else w
    v = sgn * 1j * (zz - c)
    return v * (zz.imag / abs(v))


# ---------------------------------------------------------------------------
# Surfaces


class Surface:
    """Base class; concrete variants implement the geometry hooks."""

    name = "surface"
    is_comparison_only = False

    # -- chart bookkeeping ---------------------------------------------------

    def point(self, x1: float, x2: float) -> SurfacePoint:
        p = SurfacePoint(float(x1), float(x2))
        self.check_point(p)
        return p

    def check_point(self, p: SurfacePoint) -> None:
        pass

    def chart_delta(self, a: SurfacePoint, b: SurfacePoint) -> np.ndarray:
        """Chart difference a - b, reduced by chart periodicity where any."""
        return a.coords - b.coords

    # -- metric --------------------------------------------------------------

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        raise NotImplementedError

    def gaussian_curvature(self, p: SurfacePoint) -> float:
        raise NotImplementedError

    def christoffel(self, p: SurfacePoint) -> np.ndarray:
        """Symbols G[k, i, j] of the Levi-Civita connection."""
        raise NotImplementedError

    def laplacian_coeffs(self, p: SurfacePoint):
        """(A11, A22, B1, B2) with Delta f = A11 f_11 + A22 f_22 + B1 f_1 + B2 f_2."""
        raise NotImplementedError

    def inner(self, v: TangentVec, w: TangentVec) -> float:
        g = self.metric_at(v.base)
        return float(v.components @ g @ w.components)

    def norm(self, v: TangentVec) -> float:
        return math.sqrt(max(self.inner(v, v), 0.0))

    def unit_vector(self, p: SurfacePoint, v1: float, v2: float) -> TangentVec:
        v = TangentVec(p, float(v1), float(v2))
        n = self.norm(v)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return TangentVec(p, v.v1 / n, v.v2 / n)

    def rotate90(self, v: TangentVec) -> TangentVec:
        """Metric rotation by +pi/2 (chart-positive orientation)."""
        g = self.metric_at(v.base)
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        rootdet = math.sqrt(det)
        # sqrt(det g) * g^{-1} J0, with J0 the Euclidean quarter turn
        a = (-g[0, 1] * v.v1 - g[1, 1] * v.v2) / rootdet
        b = (g[0, 0] * v.v1 + g[0, 1] * v.v2) / rootdet
        return TangentVec(v.base, a, b)

    # -- geometry ------------------------------------------------------------

    def geodesic_flow(
        self, p: SurfacePoint, v: TangentVec, r: float, lifted: bool = False
    ) -> tuple[SurfacePoint, TangentVec]:
        raise NotImplementedError

    def distance(self, p: SurfacePoint, q: SurfacePoint, lifted: bool = False) -> float:
        raise NotImplementedError

    def connecting_geodesic(
        self, p: SurfacePoint, q: SurfacePoint, lifted: bool = False
    ) -> tuple[float, TangentVec, TangentVec]:
        """Return (r, unit tangent at p toward q, unit tangent at q away from p)."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


class FlatTorus(Surface):
    """R^2 / (L1 Z x L2 Z) with the Euclidean metric."""

    name = "flat_torus"

    def __init__(self, L1: float, L2: float):
        if L1 <= 0 or L2 <= 0:
            raise ValueError("torus periods must be positive")
        self.L1 = float(L1)
        self.L2 = float(L2)

    def point(self, x1: float, x2: float) -> SurfacePoint:
        return SurfacePoint(float(x1) % self.L1, float(x2) % self.L2)

    def chart_delta(self, a: SurfacePoint, b: SurfacePoint) -> np.ndarray:
        d = a.coords - b.coords
        d[0] = (d[0] + self.L1 / 2.0) % self.L1 - self.L1 / 2.0
        d[1] = (d[1] + self.L2 / 2.0) % self.L2 - self.L2 / 2.0
        return d

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        return np.eye(2)

    def gaussian_curvature(self, p: SurfacePoint) -> float:
        return 0.0

    def christoffel(self, p: SurfacePoint) -> np.ndarray:
        return np.zeros((2, 2, 2))

    def laplacian_coeffs(self, p: SurfacePoint):
        return 1.0, 1.0, 0.0, 0.0

    def geodesic_flow(self, p, v, r, lifted=False):
        x1 = p.x1 + r * v.v1
        x2 = p.x2 + r * v.v2
        q = SurfacePoint(x1, x2) if lifted else self.point(x1, x2)
        return q, TangentVec(q, v.v1, v.v2)

    def distance(self, p, q, lifted=False):
        if lifted:
            return math.hypot(p.x1 - q.x1, p.x2 - q.x2)
        d = self.chart_delta(p, q)
        return float(math.hypot(d[0], d[1]))

    def connecting_geodesic(self, p, q, lifted=False):
        if lifted:
            d = q.coords - p.coords
        else:
            d = -self.chart_delta(p, q)
        r = math.hypot(d[0], d[1])
        if r == 0.0:
            raise ValueError("connecting geodesic of coincident points")
        u1, u2 = d[0] / r, d[1] / r
        return r, TangentVec(p, u1, u2), TangentVec(q, u1, u2)

    def to_config(self) -> dict:
        return {"type": "flat_torus", "L1": self.L1, "L2": self.L2}


class HyperbolicPlane(Surface):
    """Upper half-plane with metric (1/(a*x2))^2 I, so K = -a^2."""

    name = "hyperbolic"

    def __init__(self, a: float = 1.0):
        if a <= 0:
            raise ValueError("curvature scale a must be positive")
        self.a = float(a)

    def check_point(self, p: SurfacePoint) -> None:
        if not p.x2 > 0:
            raise DomainError(f"point {p} not in the upper half-plane")

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        self.check_point(p)
        w = 1.0 / (self.a * p.x2) ** 2
        return np.array([[w, 0.0], [0.0, w]])

    def gaussian_curvature(self, p: SurfacePoint) -> float:
        self.check_point(p)
        return -self.a**2

    def christoffel(self, p: SurfacePoint) -> np.ndarray:
        # conformal factor u = -log(a x2): u_x = 0, u_y = -1/x2
        y = p.x2
        G = np.zeros((2, 2, 2))
        G[0, 0, 1] = G[0, 1, 0] = -1.0 / y
        G[1, 0, 0] = 1.0 / y
        G[1, 1, 1] = -1.0 / y
        return G

    def laplacian_coeffs(self, p: SurfacePoint):
        w = (self.a * p.x2) ** 2
        return w, w, 0.0, 0.0

    def geodesic_flow(self, p, v, r, lifted=False):
        self.check_point(p)
        theta = math.atan2(v.v2, v.v1)
        M = _rotation_about_i(math.pi / 2.0 - theta).compose(_frame_to_i(p))
        Minv = M.inv()
        w = 1j * math.exp(self.a * r)
        z = Minv.apply(w)
        dz = Minv.deriv(w) * w  # d/dt_std of the standard flow, pushed down
        vout = self.a * dz
        q = SurfacePoint(z.real, z.imag)
        return q, TangentVec(q, vout.real, vout.imag)

    def distance(self, p, q, lifted=False):
        self.check_point(p)
        self.check_point(q)
        chord = math.hypot(p.x1 - q.x1, p.x2 - q.x2)
        return 2.0 * math.asinh(chord / (2.0 * math.sqrt(p.x2 * q.x2))) / self.a

    def connecting_geodesic(self, p, q, lifted=False):
        self.check_point(p)
        self.check_point(q)
        r = self.distance(p, q)
        if r == 0.0:
            raise ValueError("connecting geodesic of coincident points")
        zp, zq = p.as_complex(), q.as_complex()
        vp_std = _std_direction_between(zp, zq, at_start=True)
        vq_std = _std_direction_between(zp, zq, at_start=False)
        vp = self.a * vp_std
        vq = self.a * vq_std
        return r, TangentVec(p, vp.real, vp.imag), TangentVec(q, vq.real, vq.imag)

    def to_config(self) -> dict:
        return {"type": "hyperbolic", "a": self.a}


class ConformalField:
    """Scalar field u for a conformal metric e^{2u}(dx^2 + dy^2).

    ``u`` is evaluated pointwise.  Analytic ``grad`` and ``lap`` callbacks are
    optional; when absent, central differences with step ``h`` are used, so
    the field must be evaluable in a 2h collar around the chart rectangle.
    """

    def __init__(self, u, grad=None, lap=None, h: float = 1e-4, name: str = "custom"):
        self.u = u
        self._grad = grad
        self._lap = lap
        self.h = float(h)
        self.name = name

    def grad(self, x: float, y: float) -> tuple[float, float]:
        if self._grad is not None:
            return self._grad(x, y)
        h = self.h
        ux = (self.u(x + h, y) - self.u(x - h, y)) / (2.0 * h)
        uy = (self.u(x, y + h) - self.u(x, y - h)) / (2.0 * h)
        return ux, uy

    def lap(self, x: float, y: float) -> float:
        if self._lap is not None:
            return self._lap(x, y)
        h = self.h
        return (
            self.u(x + h, y)
            + self.u(x - h, y)
            + self.u(x, y + h)
            + self.u(x, y - h)
            - 4.0 * self.u(x, y)
        ) / (h * h)


def half_plane_field(a: float = 1.0) -> ConformalField:
    """Exactly hyperbolic field u = -log(a y) with analytic derivatives."""
    return ConformalField(
        u=lambda x, y: -math.log(a * y),
        grad=lambda x, y: (0.0, -1.0 / y),
        lap=lambda x, y: 1.0 / (y * y),
        name="half_plane",
    )


def poincare_disk_field() -> ConformalField:
    """u = log(2/(1-|x|^2)): the curvature -1 disk, finite differences only."""
    return ConformalField(
        u=lambda x, y: math.log(2.0 / (1.0 - (x * x + y * y))),
        name="poincare_disk",
    )


_FIELD_REGISTRY = {
    "half_plane": half_plane_field,
    "poincare_disk": poincare_disk_field,
}


class ConformalSurface(Surface):
    """Metric e^{2u}(dx^2+dy^2) on the open rectangle (x1m,x1M) x (x2m,x2M)."""

    name = "conformal"

    def __init__(self, field: ConformalField, rect, validate: bool = True,
                 field_params: dict | None = None):
        self.field = field
        self.rect = tuple(float(t) for t in rect)
        self.field_params = dict(field_params or {})
        if self.rect[0] >= self.rect[1] or self.rect[2] >= self.rect[3]:
            raise ValueError("rectangle must have positive extent")
        if validate:
            self._validate_nonpositive()

    @classmethod
    def from_named_field(cls, name: str, rect, **params) -> "ConformalSurface":
        try:
            ctor = _FIELD_REGISTRY[name]
        except KeyError:
            raise ValueError(f"unknown conformal field {name!r}") from None
        return cls(ctor(**params), rect, field_params=params)

    def _validate_nonpositive(self) -> None:
        x1m, x1M, x2m, x2M = self.rect
        pad1 = (x1M - x1m) * 1e-3 + 2 * self.field.h
        pad2 = (x2M - x2m) * 1e-3 + 2 * self.field.h
        xs = np.linspace(x1m + pad1, x1M - pad1, 64)
        ys = np.linspace(x2m + pad2, x2M - pad2, 64)
        worst = -np.inf
        for x in xs:
            for y in ys:
                k = -math.exp(-2.0 * self.field.u(x, y)) * self.field.lap(x, y)
                worst = max(worst, k)
        if worst > 1e-9:
            raise ValueError(
                f"conformal metric has positive curvature (max K = {worst:.3e})"
            )

    def check_point(self, p: SurfacePoint) -> None:
        x1m, x1M, x2m, x2M = self.rect
        if not (x1m < p.x1 < x1M and x2m < p.x2 < x2M):
            raise DomainError(f"point {p} outside chart rectangle {self.rect}")

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        self.check_point(p)
        w = math.exp(2.0 * self.field.u(p.x1, p.x2))
        return np.array([[w, 0.0], [0.0, w]])

    def gaussian_curvature(self, p: SurfacePoint) -> float:
        self.check_point(p)
        return -math.exp(-2.0 * self.field.u(p.x1, p.x2)) * self.field.lap(p.x1, p.x2)

    def christoffel(self, p: SurfacePoint) -> np.ndarray:
        ux, uy = self.field.grad(p.x1, p.x2)
        G = np.empty((2, 2, 2))
        G[0] = [[ux, uy], [uy, -ux]]
        G[1] = [[-uy, ux], [ux, uy]]
        return G

    def laplacian_coeffs(self, p: SurfacePoint):
        w = math.exp(-2.0 * self.field.u(p.x1, p.x2))
        return w, w, 0.0, 0.0

    def _rhs(self, t, y):
        ux, uy = self.field.grad(y[0], y[1])
        v1, v2 = y[2], y[3]
        a1 = -(ux * v1 * v1 + 2.0 * uy * v1 * v2 - ux * v2 * v2)
        a2 = -(-uy * v1 * v1 + 2.0 * ux * v1 * v2 + uy * v2 * v2)
        return [v1, v2, a1, a2]

    def _events(self):
        x1m, x1M, x2m, x2M = self.rect
        evs = []
        for fn in (
            lambda t, y: y[0] - x1m,
            lambda t, y: x1M - y[0],
            lambda t, y: y[1] - x2m,
            lambda t, y: x2M - y[1],
        ):
            fn.terminal = True
            evs.append(fn)
        return evs

    def _integrate(self, p: SurfacePoint, v: TangentVec, r: float, dense=False):
        self.check_point(p)
        # purely relative error control: chart coordinates may decay
        # exponentially along long geodesics, and an absolute floor would
        # let them drift across the boundary; the explicit first step
        # avoids the init heuristic dividing by the tiny scale
        sol = solve_ivp(
            self._rhs,
            (0.0, r),
            [p.x1, p.x2, v.v1, v.v2],
            method="DOP853",
            rtol=1e-10,
            atol=1e-300,
            first_step=min(0.05, abs(r) / 16.0),
            events=self._events(),
            dense_output=dense,
        )
        if sol.status == 1:  # terminated by a boundary event
            t_exit = min(te[0] for te in sol.t_events if len(te))
            raise EscapeError(
                f"geodesic left the chart rectangle at arc length {t_exit:.6g}",
                exit_parameter=t_exit,
            )
        if not sol.success:
            raise ConvergenceError(f"geodesic integration failed: {sol.message}")
        return sol

    def geodesic_flow(self, p, v, r, lifted=False):
        if r == 0.0:
            return p, v
        sol = self._integrate(p, v, r)
        x1, x2, v1, v2 = sol.y[:, -1]
        q = SurfacePoint(x1, x2)
        out = self.unit_vector(q, v1, v2)  # renormalize against drift
        return q, out

    def geodesic_path(self, p, v, r):
        """Dense solution object for 0 <= t <= r (internal helper)."""
        return self._integrate(p, v, r, dense=True)

    def distance(self, p, q, lifted=False):
        return self.connecting_geodesic(p, q)[0]

    def connecting_geodesic(self, p, q, lifted=False):
        self.check_point(p)
        self.check_point(q)
        chord = math.hypot(q.x1 - p.x1, q.x2 - p.x2)
        if chord == 0.0:
            raise ValueError("connecting geodesic of coincident points")
        # arc-length budget from the conformal factor along the chart segment
        emax = 0.0
        for lam in np.linspace(0.0, 1.0, 9):
            x = p.x1 + lam * (q.x1 - p.x1)
            y = p.x2 + lam * (q.x2 - p.x2)
            emax = max(emax, math.exp(self.field.u(x, y)))
        r_max = 1.5 * emax * chord + 0.1

        theta0 = math.atan2(q.x2 - p.x2, q.x1 - p.x1)

        def shoot(theta):
            """Signed miss of q and closest-approach info for launch angle theta."""
            v = self.unit_vector(p, math.cos(theta), math.sin(theta))
            try:
                sol = self._integrate(p, v, r_max, dense=True)
                t_end = r_max
            except EscapeError as e:
                sol = None
                t_end = e.exit_parameter
                v_keep = v
            if sol is None:
                span = t_end * (1.0 - 1e-9)
                sol = solve_ivp(
                    self._rhs,
                    (0.0, span),
                    [p.x1, p.x2, v_keep.v1, v_keep.v2],
                    method="DOP853",
                    rtol=1e-10,
                    atol=1e-300,
                    first_step=min(0.05, abs(span) / 16.0),
                    dense_output=True,
                )
                t_end = sol.t[-1]
            ts = np.linspace(0.0, t_end, 400)
            path = sol.sol(ts)
            d2 = (path[0] - q.x1) ** 2 + (path[1] - q.x2) ** 2
            i = int(np.argmin(d2))
            lo = ts[max(i - 1, 0)]
            hi = ts[min(i + 1, len(ts) - 1)]
            for _ in range(80):  # golden-section refine of closest approach
                m1 = lo + 0.382 * (hi - lo)
                m2 = lo + 0.618 * (hi - lo)
                p1 = sol.sol(m1)
                p2 = sol.sol(m2)
                if (p1[0] - q.x1) ** 2 + (p1[1] - q.x2) ** 2 < (p2[0] - q.x1) ** 2 + (
                    p2[1] - q.x2
                ) ** 2:
                    hi = m2
                else:
                    lo = m1
            t_best = 0.5 * (lo + hi)
            st = sol.sol(t_best)
            ex, ey = q.x1 - st[0], q.x2 - st[1]
            cross = st[2] * ey - st[3] * ex
            miss = math.hypot(ex, ey)
            return cross, miss, t_best, st

        # bracket the zero of the signed cross product in the launch angle,
        # then bisect; re-center and shrink the scan window if no bracket yet
        theta_c, span = theta0, math.pi / 2.0
        for _ in range(8):
            thetas = np.linspace(theta_c - span, theta_c + span, 33)
            shots = [shoot(th) + (th,) for th in thetas]
            hit = min(shots, key=lambda t: t[1])
            if hit[1] <= 1e-8:
                return self._shot_to_result(p, q, hit)
            bracket = None
            for s0, s1 in zip(shots, shots[1:]):
                if s0[0] == 0.0 or s0[0] * s1[0] < 0:
                    bracket = (s0, s1)
                    break
            if bracket is None:
                theta_c, span = hit[4], span * 0.25
                continue
            (cr_lo, _, _, _, lo), (_, _, _, _, hi) = bracket
            hit = None
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                cr, miss, t_best, st = shoot(mid)
                hit = (cr, miss, t_best, st, mid)
                if miss <= 1e-9:
                    break
                if cr_lo * cr <= 0:
                    hi = mid
                else:
                    lo, cr_lo = mid, cr
            if hit[1] <= 1e-8:
                return self._shot_to_result(p, q, hit)
            theta_c, span = hit[4], max(abs(hi - lo) * 4.0, 1e-9)
        raise ConvergenceError("two-point geodesic shooting did not converge")

    def _shot_to_result(self, p, q, hit):
        _, _, r, st, theta = hit
        v_p = self.unit_vector(p, math.cos(theta), math.sin(theta))
        v_q = self.unit_vector(q, st[2], st[3])
        return float(r), v_p, v_q

    def to_config(self) -> dict:
        return {
            "type": "conformal",
            "field": self.field.name,
            "rect": list(self.rect),
            **({"params": self.field_params} if self.field_params else {}),
        }


class RoundSphere(Surface):
    """Round sphere of radius R in colatitude chart; comparison model only.

    Chart coordinates are (x1, x2) = (azimuth phi, colatitude theta) with the
    metric diag(R^2 sin^2 theta, R^2).  The poles are chart-degenerate; metric
    queries there are rejected, but curves may pass near them.
    """

    name = "sphere"
    is_comparison_only = True

    def __init__(self, R: float = 1.0):
        if R <= 0:
            raise ValueError("radius must be positive")
        self.R = float(R)

    def point(self, x1: float, x2: float) -> SurfacePoint:
        p = SurfacePoint(float(x1) % (2.0 * math.pi), float(x2))
        self.check_point(p)
        return p

    def check_point(self, p: SurfacePoint) -> None:
        if not 0.0 <= p.x2 <= math.pi:
            raise DomainError(f"colatitude {p.x2} outside [0, pi]")

    def chart_delta(self, a: SurfacePoint, b: SurfacePoint) -> np.ndarray:
        d = a.coords - b.coords
        d[0] = (d[0] + math.pi) % (2.0 * math.pi) - math.pi
        return d

    def _check_nonpolar(self, p: SurfacePoint) -> None:
        if math.sin(p.x2) < 1e-12:
            raise DomainError("metric is chart-degenerate at the poles")

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        self.check_point(p)
        self._check_nonpolar(p)
        return np.array(
            [[(self.R * math.sin(p.x2)) ** 2, 0.0], [0.0, self.R**2]]
        )

    def gaussian_curvature(self, p: SurfacePoint) -> float:
        return 1.0 / self.R**2

    def christoffel(self, p: SurfacePoint) -> np.ndarray:
        self._check_nonpolar(p)
        th = p.x2
        G = np.zeros((2, 2, 2))
        G[0, 0, 1] = G[0, 1, 0] = math.cos(th) / math.sin(th)
        G[1, 0, 0] = -math.sin(th) * math.cos(th)
        return G

    def laplacian_coeffs(self, p: SurfacePoint):
        self._check_nonpolar(p)
        th = p.x2
        R2 = self.R**2
        return (
            1.0 / (R2 * math.sin(th) ** 2),
            1.0 / R2,
            0.0,
            math.cos(th) / (R2 * math.sin(th)),
        )

    def _to_xyz(self, p: SurfacePoint) -> np.ndarray:
        st, ct = math.sin(p.x2), math.cos(p.x2)
        return self.R * np.array([st * math.cos(p.x1), st * math.sin(p.x1), ct])

    def _tangent_to_xyz(self, v: TangentVec) -> np.ndarray:
        p = v.base
        st, ct = math.sin(p.x2), math.cos(p.x2)
        cp, sp = math.cos(p.x1), math.sin(p.x1)
        dphi = self.R * np.array([-st * sp, st * cp, 0.0])
        dtheta = self.R * np.array([ct * cp, ct * sp, -st])
        return v.v1 * dphi + v.v2 * dtheta

    def _from_xyz(self, x: np.ndarray) -> SurfacePoint:
        th = math.acos(max(-1.0, min(1.0, x[2] / self.R)))
        ph = math.atan2(x[1], x[0]) % (2.0 * math.pi)
        return SurfacePoint(ph, th)

    def geodesic_flow(self, p, v, r, lifted=False):
        self.check_point(p)
        p3 = self._to_xyz(p)
        t3 = self._tangent_to_xyz(v)
        t3 = t3 / np.linalg.norm(t3)
        c, s = math.cos(r / self.R), math.sin(r / self.R)
        q3 = c * p3 + s * self.R * t3
        w3 = -s * p3 / self.R + c * t3
        q = self._from_xyz(q3)
        st = math.sin(q.x2)
        if st < 1e-12:
            raise DomainError("geodesic endpoint hit a chart pole")
        # invert the chart differential at q
        vphi = (q3[0] * w3[1] - q3[1] * w3[0]) / (q3[0] ** 2 + q3[1] ** 2)
        vtheta = -w3[2] / (self.R * st)
        return q, TangentVec(q, vphi, vtheta)

    def distance(self, p, q, lifted=False):
        c = float(np.dot(self._to_xyz(p), self._to_xyz(q))) / self.R**2
        return self.R * math.acos(max(-1.0, min(1.0, c)))

    def to_config(self) -> dict:
        return {"type": "sphere", "R": self.R}


# ---------------------------------------------------------------------------
# Deck transformations


class DeckTransform:
    def apply_point(self, S: Surface, p: SurfacePoint) -> SurfacePoint:
        raise NotImplementedError

    def apply_tangent(self, S: Surface, v: TangentVec) -> TangentVec:
        raise NotImplementedError

    def is_identity(self) -> bool:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


class TorusTranslation(DeckTransform):
    """Lattice translation by (m L1, n L2) on the cover of a flat torus."""

    def __init__(self, m: int, n: int):
        self.m = int(m)
        self.n = int(n)

    def _check(self, S: Surface) -> FlatTorus:
        if not isinstance(S, FlatTorus):
            raise UnsupportedSurfaceError("torus translation needs a FlatTorus")
        return S

    def apply_point(self, S, p):
        T = self._check(S)
        return SurfacePoint(p.x1 + self.m * T.L1, p.x2 + self.n * T.L2)

    def apply_tangent(self, S, v):
        q = self.apply_point(S, v.base)
        return TangentVec(q, v.v1, v.v2)

    def is_identity(self):
        return self.m == 0 and self.n == 0

    def to_config(self):
        return {"type": "torus_translation", "m": self.m, "n": self.n}


class HyperbolicMobius(DeckTransform):
    """Orientation-preserving isometry of the half-plane, det = 1 matrix."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("Moebius matrix must be 2x2")
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det - 1.0) > 1e-12:
            raise ValueError(f"Moebius matrix determinant {det} != 1")
        self.matrix = m
        self._mob = _Mobius(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def translation_along_axis(cls, T: float) -> "HyperbolicMobius":
        """z -> e^T z, the hyperbolic translation along the imaginary axis."""
        return cls([[math.exp(T / 2.0), 0.0], [0.0, math.exp(-T / 2.0)]])

    def _check(self, S: Surface) -> None:
        if not isinstance(S, (HyperbolicPlane, ConformalSurface)):
            raise UnsupportedSurfaceError(
                "Moebius deck transform needs a hyperbolic chart"
            )

    def apply_point(self, S, p):
        self._check(S)
        z = self._mob.apply(p.as_complex())
        return SurfacePoint(z.real, z.imag)

    def apply_tangent(self, S, v):
        self._check(S)
        z = v.base.as_complex()
        w = self._mob.apply(z)
        dv = self._mob.deriv(z) * v.as_complex()
        return TangentVec(SurfacePoint(w.real, w.imag), dv.real, dv.imag)

    def is_identity(self):
        return bool(np.allclose(self.matrix, np.eye(2)) or np.allclose(self.matrix, -np.eye(2)))

    def to_config(self):
        return {"type": "mobius", "matrix": self.matrix.tolist()}


# ---------------------------------------------------------------------------
# Module-level operation wrappers and config round-trips


def metric_at(S: Surface, p: SurfacePoint) -> np.ndarray:
    return S.metric_at(p)


def gaussian_curvature(S: Surface, p: SurfacePoint) -> float:
    return S.gaussian_curvature(p)


def geodesic_flow(S, p, v, r, lifted=False):
    return S.geodesic_flow(p, v, r, lifted=lifted)


def distance(S, p, q, lifted=False):
    return S.distance(p, q, lifted=lifted)


def apply_deck(alpha: DeckTransform, S: Surface, obj):
    if isinstance(obj, TangentVec):
        return alpha.apply_tangent(S, obj)
    if isinstance(obj, SurfacePoint):
        return alpha.apply_point(S, obj)
    raise TypeError(f"cannot apply deck transform to {type(obj).__name__}")


def surface_from_config(cfg: dict) -> Surface:
    kind = cfg.get("type")
    if kind == "flat_torus":
        return FlatTorus(cfg["L1"], cfg["L2"])
    if kind == "hyperbolic":
        return HyperbolicPlane(cfg.get("a", 1.0))
    if kind == "conformal":
        return ConformalSurface.from_named_field(
            cfg["field"], cfg["rect"], **cfg.get("params", {})
        )
    if kind == "sphere":
        return RoundSphere(cfg.get("R", 1.0))
    raise ValueError(f"unknown surface type {kind!r}")


def deck_from_config(cfg: dict) -> DeckTransform:
    kind = cfg.get("type")
    if kind == "torus_translation":
        return TorusTranslation(cfg["m"], cfg["n"])
    if kind == "mobius":
        return HyperbolicMobius(cfg["matrix"])
    if kind == "axis_translation":
        return HyperbolicMobius.translation_along_axis(cfg["T"])
    raise ValueError(f"unknown deck transform type {kind!r}")
