"""Scalar Jacobi and Riccati equations along geodesics.

Two curvature quantities drive the comparison arguments elsewhere in the
package: the curvature of a geodesic circle of finite radius, and its
limiting value as the radius grows.  Both reduce to the scalar Jacobi
equation j'' + K j = 0 along a unit-speed ray; the limit is extracted as
the stable branch of the associated Riccati equation u' = -u^2 - K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    ConvergenceError,
    EscapeError,
    RangeError,
    UnderflowError,
    UnsupportedSurfaceError,
)
from .surface import (
    ConformalSurface,
    FlatTorus,
    HyperbolicPlane,
    RoundSphere,
    Surface,
    SurfacePoint,
    TangentVec,
)

_R_START = 20.0
_R_CAP = 1280.0
_RTOL = 1e-10
# Positions can collapse exponentially along deep rays (y ~ e^-R on
# hyperbolic-like charts), so error control must stay purely relative;
# components that are exactly zero contribute no error either way.
_ATOL = 1e-300


def _constant_curvature(S: Surface) -> Optional[float]:
    """Gaussian curvature if the surface is a constant-K model, else None."""
    if isinstance(S, FlatTorus):
        return 0.0
    if isinstance(S, HyperbolicPlane):
        return -S.a * S.a
    if isinstance(S, RoundSphere):
        return 1.0 / (S.R * S.R)
    return None


@dataclass
class GeodesicRay:
    """Unit-speed geodesic r -> zeta(r) with zeta(0) = p, zeta'(0) = v.

    ``curvature_samples`` maps the arc-length parameter r to the Gaussian
    curvature K(zeta(r)); it defaults to geodesic flow plus a curvature
    query, collapsing to a constant for the constant-K models.
    """

    surface: Surface
    p: SurfacePoint
    v: TangentVec
    curvature_samples: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if abs(self.surface.norm(self.v) - 1.0) > 1e-9:
            raise ValueError("ray direction must be a unit tangent vector")
        if self.curvature_samples is None:
            K = _constant_curvature(self.surface)
            if K is not None:
                self.curvature_samples = lambda r, _K=K: _K
            else:
                self.curvature_samples = self._sample_curvature

    def _sample_curvature(self, r: float) -> float:
        q, _ = self.surface.geodesic_flow(self.p, self.v, r)
        return self.surface.gaussian_curvature(q)


@dataclass
class RiccatiTrace:
    """Stable Riccati solution sampled on [-horizon, 0].

    u solves u' = -u^2 - K(zeta(r)) with u(-horizon) = 0; ``converged``
    records that doubling the horizon moved u(0) by at most the requested
    tolerance.
    """

    grid: np.ndarray
    u: np.ndarray
    converged: bool
    horizon: float

    @property
    def value(self) -> float:
        """u(0), the limiting-circle-curvature estimate."""
        return float(self.u[-1])


def _jacobi_constant(K: float, j0: float, dj0: float, r: float):
    if K == 0.0:
        return j0 + dj0 * r, dj0
    if K < 0.0:
        a = math.sqrt(-K)
        ch, sh = math.cosh(a * r), math.sinh(a * r)
        return j0 * ch + dj0 * sh / a, j0 * a * sh + dj0 * ch
    b = math.sqrt(K)
    cs, sn = math.cos(b * r), math.sin(b * r)
    return j0 * cs + dj0 * sn / b, -j0 * b * sn + dj0 * cs


def _solve_extended(S: ConformalSurface, rhs, y0, span, dense=False):
    """Integrate a geodesic-plus-extras system on a conformal chart."""
    sol = solve_ivp(
        rhs,
        span,
        y0,
        method="DOP853",
        rtol=_RTOL,
        atol=_ATOL,
        # the automatic first-step heuristic divides by the near-zero
        # error scale of components starting at exactly 0
        first_step=min(0.05, abs(span[1] - span[0]) / 16.0),
        events=S._events(),
        dense_output=dense,
    )
    if sol.status == 1:
        t_exit = min((te[0] for te in sol.t_events if len(te)), key=abs)
        raise EscapeError(
            f"geodesic left the chart rectangle at arc length {t_exit:.6g}",
            exit_parameter=t_exit,
        )
    if not sol.success:
        raise ConvergenceError(f"joint geodesic integration failed: {sol.message}")
    return sol


def _conformal_jacobi(S: ConformalSurface, p, v, j0, dj0, r, dense=False):
    f = S.field

    def rhs(t, st):
        d = S._rhs(t, st[:4])
        K = -math.exp(-2.0 * f.u(st[0], st[1])) * f.lap(st[0], st[1])
        return [d[0], d[1], d[2], d[3], st[5], -K * st[4]]

    y0 = [p.x1, p.x2, v.v1, v.v2, j0, dj0]
    return _solve_extended(S, rhs, y0, (0.0, r), dense=dense)


def jacobi_solve(ray: GeodesicRay, j0: float, dj0: float, r: float):
    """Solve j'' + K(zeta(t)) j = 0 along the ray; return (j(r), j'(r)).

    Initial conditions are j(0) = j0, j'(0) = dj0.  Constant-curvature
    surfaces use the trigonometric/hyperbolic closed forms; conformal
    charts integrate the geodesic and the Jacobi scalar jointly.
    """
    if abs(r) > 100.0:
        raise RangeError(f"jacobi parameter |r| = {abs(r)} exceeds 100")
    K = _constant_curvature(ray.surface)
    if K is not None:
        return _jacobi_constant(K, float(j0), float(dj0), float(r))
    if r == 0.0:
        return float(j0), float(dj0)
    S = ray.surface
    if not isinstance(S, ConformalSurface):
        raise UnsupportedSurfaceError(
            f"no Jacobi solver for surface type {type(S).__name__}"
        )
    sol = _conformal_jacobi(S, ray.p, ray.v, float(j0), float(dj0), float(r))
    return float(sol.y[4, -1]), float(sol.y[5, -1])


def _riccati_once(ray: GeodesicRay, R: float, n_grid: int):
    """Solve the stable branch for one horizon; return (grid, u) on [-R, 0]."""
    S = ray.surface
    grid = np.linspace(-R, 0.0, n_grid + 1)
    K = _constant_curvature(S)
    if K is not None and K <= 0.0:
        if K == 0.0:
            return grid, np.zeros_like(grid)
        a = math.sqrt(-K)
        return grid, a * np.tanh(a * (grid + R))
    if not isinstance(S, ConformalSurface):
        raise UnsupportedSurfaceError(
            f"no Riccati solver for surface type {type(S).__name__}"
        )
    f = S.field

    def rhs(t, st):
        d = S._rhs(t, st[:4])
        K_here = -math.exp(-2.0 * f.u(st[0], st[1])) * f.lap(st[0], st[1])
        return [d[0], d[1], d[2], d[3], -st[4] * st[4] - K_here]

    # walk back to the horizon, then sweep forward with u(-R) = 0
    back = _solve_extended(
        S, lambda t, st: S._rhs(t, st), [ray.p.x1, ray.p.x2, ray.v.v1, ray.v.v2], (0.0, -R)
    )
    y0 = list(back.y[:, -1]) + [0.0]
    fwd = _solve_extended(S, rhs, y0, (0.0, R), dense=True)
    return grid, fwd.sol(grid + R)[4]


def stable_riccati(ray: GeodesicRay, tol: float = 1e-8, n_grid: int = 256) -> RiccatiTrace:
    """Extract the stable Riccati branch along the ray, certifying by doubling.

    Starting from horizon R = 20, the horizon doubles until u(0) moves by
    at most tol; horizons past 1280 raise a convergence error.
    """
    if ray.surface.is_comparison_only:
        raise UnsupportedSurfaceError(
            "limiting circle curvature requires nonpositive curvature"
        )
    R = _R_START
    grid, u = _riccati_once(ray, R, n_grid)
    while 2.0 * R <= _R_CAP:
        R *= 2.0
        grid2, u2 = _riccati_once(ray, R, n_grid)
        if abs(u2[-1] - u[-1]) <= tol:
            return RiccatiTrace(grid2, u2, True, R)
        grid, u = grid2, u2
    raise ConvergenceError(
        f"Riccati horizon doubling did not converge below {tol} by R = {_R_CAP}"
    )


def limiting_circle_curvature(
    S: Surface, p: SurfacePoint, v: TangentVec, tol: float = 1e-8
) -> float:
    """Curvature of the limiting circle through p with outward direction v.

    This is u(0) for the Riccati solution that stays bounded along the
    incoming ray; it vanishes identically on flat surfaces and equals a on
    a hyperbolic plane of curvature -a^2 (the horocycle curvature).
    """
    ray = GeodesicRay(S, p, v)
    if isinstance(S, FlatTorus):
        return 0.0
    trace = stable_riccati(ray, tol=tol)
    return max(0.0, trace.value)


def circle_point_data(S: Surface, center: SurfacePoint, v: TangentVec, r: float):
    """Arrival data of the radial ray: point, unit tangent, and the Jacobi
    circumference density j(r) (j'' + K j = 0, j(0) = 0, j'(0) = 1).

    The density is d(arc length)/d(angle at the center) for the geodesic
    circle of radius r, used to parametrize sampled circles by arc length.
    """
    K = _constant_curvature(S)
    if K is not None:
        q, w = S.geodesic_flow(center, v, r)
        j, _ = _jacobi_constant(K, 0.0, 1.0, r)
        return q, w, j
    if not isinstance(S, ConformalSurface):
        raise UnsupportedSurfaceError(
            f"no Jacobi solver for surface type {type(S).__name__}"
        )
    sol = _conformal_jacobi(S, center, v, 0.0, 1.0, r)
    x1, x2, v1, v2, j, _ = sol.y[:, -1]
    q = SurfacePoint(x1, x2)
    return q, S.unit_vector(q, v1, v2), float(j)


def circle_curvature(S: Surface, center: SurfacePoint, v: TangentVec, r: float) -> float:
    """Geodesic curvature of the circle of radius r about center.

    Evaluated at the endpoint of the ray from center in direction v; by
    rotational symmetry of the Jacobi data the result is c'(r)/c(r) where
    c'' + K c = 0, c(0) = 0, c'(0) = 1.
    """
    ray = GeodesicRay(S, center, v)
    if not 0.0 < r <= 100.0:
        raise RangeError(f"circle radius {r} outside (0, 100]")
    K = _constant_curvature(S)
    if K is not None:
        if K == 0.0:
            return 1.0 / r
        if K < 0.0:
            a = math.sqrt(-K)
            # a*coth(a r); expm1 keeps the large-r tail accurate
            return a + 2.0 * a / math.expm1(2.0 * a * r)
        b = math.sqrt(K)
        c = math.sin(b * r) / b
        if abs(c) < 1e-12:
            raise UnderflowError(f"circle radius {r} has c(r) = {c:.3e}")
        return b * math.cos(b * r) / math.sin(b * r)
    j, dj = jacobi_solve(ray, 0.0, 1.0, r)
    if abs(j) < 1e-12:
        raise UnderflowError(f"circle radius {r} has c(r) = {j:.3e}")
    return dj / j
