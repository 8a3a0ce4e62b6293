"""Closed unit-speed curves on model surfaces.

Curves carry chart derivatives (analytic where available, finite-difference
otherwise), cached samples on a uniform parameter grid, geodesic and signed
normal curvature, constructors for geodesic circles, closed torus geodesics
and perturbed circles, CSV point-list ingestion with arclength resampling,
and Fermi (tangent-normal) charts about a base curve.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import ConvergenceError, DomainError, RangeError
from .surface import (
    ConformalSurface,
    FlatTorus,
    HyperbolicPlane,
    RoundSphere,
    Surface,
    SurfacePoint,
    TangentVec,
)

# first/second-derivative 5-point stencils, offsets (-2h, -h, +h, +2h);
# the center sample drops out because differences are taken against it
_D1_W = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_D2_W = np.array([-1.0, 16.0, 16.0, -1.0]) / 12.0
_OFFS = np.array([-2.0, -1.0, 1.0, 2.0])


class Curve:
    """Closed curve t -> gamma(t) on [0, period), unit speed in the metric.

    ``param`` maps a parameter to a SurfacePoint; ``d1``/``d2`` are optional
    chart derivatives of the parametrization, replaced by finite differences
    when absent; ``batch`` is an optional vectorized sampler returning an
    (n, 2) coordinate array.  Samples of the point, velocity and covariant
    acceleration are cached on a uniform grid of ``n_cache`` parameters and
    validated for closure and unit speed at construction.
    """

    def __init__(
        self,
        surface: Surface,
        param,
        period: float,
        d1=None,
        d2=None,
        batch=None,
        n_cache: int = 4096,
        name: str = "custom",
        config=None,
    ):
        if period <= 0:
            raise ValueError("curve period must be positive")
        self.surface = surface
        self.period = float(period)
        self.name = name
        self._param = param
        self._d1 = d1
        self._d2 = d2
        self._batch = batch
        self._config = config
        scale = self.period / (2.0 * math.pi)
        self._h1 = 1e-4 * scale
        self._h2 = 6e-4 * scale
        self.t_grid = np.arange(n_cache) * (self.period / n_cache)
        self._build_cache()

    @property
    def length(self) -> float:
        return self.period

    def point(self, t: float) -> SurfacePoint:
        return self._param(t % self.period)

    def points_at(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float) % self.period
        if self._batch is not None:
            return self._batch(ts)
        return np.array([self._param(t).coords for t in ts])

    def velocity(self, t: float) -> np.ndarray:
        if self._d1 is not None:
            return np.asarray(self._d1(t % self.period), dtype=float)
        return self._fd(t, self._h1, _D1_W) / self._h1

    def covariant_acceleration(self, t: float) -> np.ndarray:
        """Chart acceleration corrected by the Christoffel symbols."""
        if self._d2 is not None:
            dd = np.asarray(self._d2(t % self.period), dtype=float)
        elif self._d1 is not None:
            vs = np.array([self.velocity(t + k * self._h2) for k in _OFFS])
            dd = _D1_W @ vs / self._h2
        else:
            dd = self._fd(t, self._h2, _D2_W) / self._h2**2
        v = self.velocity(t)
        G = self.surface.christoffel(self.point(t))
        return dd + np.einsum("kij,i,j->k", G, v, v)

    def tangent(self, t: float) -> TangentVec:
        v = self.velocity(t)
        return TangentVec(self.point(t), v[0], v[1])

    def _fd(self, t, h, weights):
        base = self.point(t)
        deltas = np.array(
            [self.surface.chart_delta(self.point(t + k * h), base) for k in _OFFS]
        )
        return weights @ deltas

    def _build_cache(self):
        self.points = self.points_at(self.t_grid)
        self.velocities = np.array([self.velocity(t) for t in self.t_grid])
        self.accelerations = np.array(
            [self.covariant_acceleration(t) for t in self.t_grid]
        )
        gap = self.surface.chart_delta(self._param(self.period), self._param(0.0))
        scale = max(1.0, float(np.max(np.abs(self.points))))
        if math.hypot(*gap) > 1e-9 * scale:
            raise ValueError(f"curve is not closed: endpoint gap {gap}")
        speeds = np.array(
            [
                self.surface.norm(TangentVec(SurfacePoint(*p), *v))
                for p, v in zip(self.points, self.velocities)
            ]
        )
        worst = float(np.max(np.abs(speeds - 1.0)))
        if worst > 1e-6:
            raise ValueError(f"curve is not unit speed: worst deviation {worst:.3e}")

    def to_config(self):
        if self._config is None:
            raise ValueError(f"curve '{self.name}' has no config form")
        return dict(self._config)


def geodesic_curvature(gamma: Curve, t: float) -> float:
    """Nonnegative geodesic curvature |D/dt gamma'| for unit-speed curves.

    The tangential component of the covariant acceleration is projected out
    first, so small parametrization drift does not register as curvature.
    """
    S = gamma.surface
    g = S.metric_at(gamma.point(t))
    v = gamma.velocity(t)
    A = gamma.covariant_acceleration(t)
    sp2 = float(v @ g @ v)
    A_perp = A - (float(v @ g @ A) / sp2) * v
    return math.sqrt(max(0.0, float(A_perp @ g @ A_perp))) / sp2


def signed_normal_curvature(gamma: Curve, t: float) -> float:
    """Inner product of D/dt gamma' with the +90-degree rotated tangent.

    Positive on counterclockwise circles: their inward normal is the +90
    rotation of the tangent.
    """
    S = gamma.surface
    p = gamma.point(t)
    g = S.metric_at(p)
    v = gamma.velocity(t)
    A = gamma.covariant_acceleration(t)
    n = S.rotate90(TangentVec(p, v[0], v[1]))
    sp = math.sqrt(float(v @ g @ v))
    return float(A @ g @ np.array([n.v1, n.v2])) / sp**3


def _check_radius(r: float):
    if not 1e-2 <= r <= 50.0:
        raise RangeError(f"circle radius {r} outside [1e-2, 50]")


def _circle_config(kind, center, r, orientation, extra=None):
    cfg = {
        "type": kind,
        "center": [center.x1, center.x2],
        "radius": r,
        "orientation": orientation,
    }
    if extra:
        cfg.update(extra)
    return cfg


def geodesic_circle(
    S: Surface, center: SurfacePoint, r: float, orientation: int = 1, n_cache: int = 4096
) -> Curve:
    """Unit-speed geodesic circle of radius r about center.

    orientation +1 traverses counterclockwise in the oriented chart.
    """
    _check_radius(r)
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    cfg = _circle_config("geodesic_circle", center, r, orientation)

    if isinstance(S, FlatTorus):
        L = 2.0 * math.pi * r
        cx, cy = center.x1, center.x2

        def param(t):
            ang = orientation * 2.0 * math.pi * (t % L) / L
            return S.point(cx + r * math.cos(ang), cy + r * math.sin(ang))

        def d1(t):
            ang = orientation * 2.0 * math.pi * t / L
            return np.array(
                [-orientation * math.sin(ang), orientation * math.cos(ang)]
            )

        def d2(t):
            ang = orientation * 2.0 * math.pi * t / L
            return np.array([-math.cos(ang), -math.sin(ang)]) / r

        def batch(ts):
            ang = orientation * 2.0 * math.pi * ts / L
            return np.stack(
                [(cx + r * np.cos(ang)) % S.L1, (cy + r * np.sin(ang)) % S.L2], axis=1
            )

        return Curve(S, param, L, d1, d2, batch, n_cache, "flat_circle", cfg)

    if isinstance(S, HyperbolicPlane):
        return _hyperbolic_circle(S, center, r, orientation, n_cache, cfg)

    if isinstance(S, RoundSphere):
        return _sphere_circle(S, center, r, orientation, n_cache, cfg)

    if isinstance(S, ConformalSurface):
        return _conformal_circle(S, center, r, orientation, n_cache, cfg)

    raise DomainError(f"no geodesic circles for surface type {type(S).__name__}")


def _conformal_circle(S, center, r, orientation, n_cache, cfg):
    # sample the exponential map along radial rays; by the Gauss lemma the
    # circle tangent is the rotated radial direction and the arc length per
    # unit center angle is the Jacobi density, so first derivatives come
    # from sampled data rather than differentiated positions
    from .jacobi import circle_point_data

    n_raw = 1024
    thetas = np.linspace(0.0, 2.0 * math.pi, n_raw + 1)
    pos = np.empty((n_raw + 1, 2))
    tan = np.empty((n_raw + 1, 2))
    dens = np.empty(n_raw + 1)
    for i, th in enumerate(thetas[:-1]):
        ang = orientation * th
        v = S.unit_vector(center, math.cos(ang), math.sin(ang))
        q, w, j = circle_point_data(S, center, v, r)
        t_vec = S.rotate90(w)
        pos[i] = q.coords
        tan[i] = orientation * np.array([t_vec.v1, t_vec.v2])
        dens[i] = j
    pos[-1], tan[-1], dens[-1] = pos[0], tan[0], dens[0]
    pos_s = CubicSpline(thetas, pos, axis=0, bc_type="periodic")
    tan_s = CubicSpline(thetas, tan, axis=0, bc_type="periodic")
    s = cumulative_simpson(dens, x=thetas, initial=0.0)
    L = float(s[-1])
    theta_of_s = PchipInterpolator(s, thetas)

    def param(t):
        c = pos_s(float(theta_of_s(t % L)))
        return S.point(c[0], c[1])

    def d1(t):
        th = float(theta_of_s(t % L))
        c = pos_s(th)
        v = tan_s(th)
        # renormalize in the metric: interpolation should not perturb speed
        w = math.exp(S.field.u(c[0], c[1]))
        return v / (w * math.hypot(v[0], v[1]))

    def batch(ts):
        th = theta_of_s(np.asarray(ts, dtype=float) % L)
        return pos_s(th)

    return Curve(S, param, L, d1, None, batch, n_cache, "conformal_circle", cfg)


def _hyperbolic_circle(S, center, r, orientation, n_cache, cfg):
    # points at hyperbolic distance r from the center, parametrized by the
    # intrinsic angle: rotate the vertical ray about i, then move i to the
    # center; the elliptic rotation generator is V(z) = (1 + z^2)/2
    a = S.a
    rho = a * r
    x0, y0 = center.x1, center.x2
    w0 = 1j * math.exp(rho)
    L = 2.0 * math.pi * math.sinh(rho) / a
    dpsi = orientation * 2.0 * math.pi / L

    def unit_pos(psi):
        c, s = np.cos(psi / 2.0), np.sin(psi / 2.0)
        return (c * w0 + s) / (-s * w0 + c)

    def param(t):
        z = unit_pos(orientation * 2.0 * math.pi * (t % L) / L)
        return S.point(x0 + y0 * z.real, y0 * z.imag)

    def d1(t):
        z = unit_pos(orientation * 2.0 * math.pi * t / L)
        dz = y0 * (1.0 + z * z) / 2.0 * dpsi
        return np.array([dz.real, dz.imag])

    def d2(t):
        z = unit_pos(orientation * 2.0 * math.pi * t / L)
        dzz = y0 * z * (1.0 + z * z) / 2.0 * dpsi * dpsi
        return np.array([dzz.real, dzz.imag])

    def batch(ts):
        z = unit_pos(orientation * 2.0 * math.pi * ts / L)
        return np.stack([x0 + y0 * z.real, y0 * z.imag], axis=1)

    return Curve(S, param, L, d1, d2, batch, n_cache, "hyperbolic_circle", cfg)


def _sphere_circle(S, center, r, orientation, n_cache, cfg):
    beta = r / S.R
    if beta >= math.pi - 1e-9:
        raise DomainError(f"circle radius {r} reaches the antipode on the sphere")
    if math.sin(center.x2) < 1e-9:
        # pole-centered: a colatitude circle with analytic derivatives
        north = center.x2 < math.pi / 2.0
        theta = beta if north else math.pi - beta
        L = 2.0 * math.pi * S.R * math.sin(beta)
        dphi = orientation * 2.0 * math.pi / L

        def param(t):
            return S.point(orientation * 2.0 * math.pi * (t % L) / L, theta)

        def batch(ts):
            phis = (orientation * 2.0 * math.pi * ts / L) % (2.0 * math.pi)
            return np.stack([phis, np.full_like(phis, theta)], axis=1)

        return Curve(
            S,
            param,
            L,
            lambda t: np.array([dphi, 0.0]),
            lambda t: np.array([0.0, 0.0]),
            batch,
            n_cache,
            "sphere_circle",
            cfg,
        )
    # generic center: rotate a cone of angular radius beta in ambient space
    c3 = S._to_xyz(center) / S.R
    e1 = np.cross([0.0, 0.0, 1.0], c3)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c3, e1)
    L = 2.0 * math.pi * S.R * math.sin(beta)

    def param(t):
        ang = orientation * 2.0 * math.pi * (t % L) / L
        x3 = S.R * (
            math.cos(beta) * c3
            + math.sin(beta) * (math.cos(ang) * e1 + math.sin(ang) * e2)
        )
        return S._from_xyz(x3)

    return Curve(S, param, L, None, None, None, n_cache, "sphere_circle", cfg)


def torus_geodesic(
    S: FlatTorus, start: SurfacePoint, winding, n_cache: int = 4096
) -> Curve:
    """Closed geodesic on the torus with winding numbers (m, n)."""
    if not isinstance(S, FlatTorus):
        raise DomainError("closed straight geodesics require a flat torus")
    m, n = int(winding[0]), int(winding[1])
    if m == 0 and n == 0:
        raise ValueError("winding numbers cannot both vanish")
    span = np.array([m * S.L1, n * S.L2])
    L = float(np.hypot(*span))
    v = span / L
    cfg = {
        "type": "torus_geodesic",
        "start": [start.x1, start.x2],
        "winding": [m, n],
    }

    def param(t):
        return S.point(start.x1 + t * v[0], start.x2 + t * v[1])

    def batch(ts):
        return np.stack(
            [(start.x1 + ts * v[0]) % S.L1, (start.x2 + ts * v[1]) % S.L2], axis=1
        )

    return Curve(
        S,
        param,
        L,
        lambda t: v.copy(),
        lambda t: np.zeros(2),
        batch,
        n_cache,
        "torus_geodesic",
        cfg,
    )


def perturbed_circle(
    S: Surface,
    center: SurfacePoint,
    r: float,
    amp: float,
    mode: int,
    orientation: int = 1,
    n_cache: int = 4096,
) -> Curve:
    """Circle with radius modulated as r(1 + amp cos(mode theta)), unit speed."""
    _check_radius(r)
    if not abs(amp) < 1.0:
        raise RangeError(f"perturbation amplitude {amp} outside (-1, 1)")
    mode = int(mode)
    cfg = _circle_config(
        "perturbed_circle", center, r, orientation, {"amp": amp, "mode": mode}
    )

    if isinstance(S, FlatTorus):

        def lift(thetas):
            ang = orientation * thetas
            rho = r * (1.0 + amp * np.cos(mode * ang))
            return np.stack(
                [center.x1 + rho * np.cos(ang), center.x2 + rho * np.sin(ang)], axis=-1
            )

        def dlift(thetas):
            ang = orientation * thetas
            rho = r * (1.0 + amp * np.cos(mode * ang))
            drho = -r * amp * mode * np.sin(mode * ang) * orientation
            return np.stack(
                [
                    drho * np.cos(ang) - rho * orientation * np.sin(ang),
                    drho * np.sin(ang) + rho * orientation * np.cos(ang),
                ],
                axis=-1,
            )

        return _arclength_reparam(
            S, lift, dlift, 2.0 * math.pi, n_cache, "flat_perturbed_circle", cfg
        )

    if isinstance(S, HyperbolicPlane):
        a, x0, y0 = S.a, center.x1, center.x2

        def lift(thetas):
            psi = orientation * thetas
            rho = a * r * (1.0 + amp * np.cos(mode * psi))
            w0 = 1j * np.exp(rho)
            c, s = np.cos(psi / 2.0), np.sin(psi / 2.0)
            z = (c * w0 + s) / (-s * w0 + c)
            return np.stack([x0 + y0 * z.real, y0 * z.imag], axis=-1)

        def dlift(thetas):
            psi = orientation * thetas
            rho = a * r * (1.0 + amp * np.cos(mode * psi))
            drho = -a * r * amp * mode * np.sin(mode * psi) * orientation
            w0 = 1j * np.exp(rho)
            c, s = np.cos(psi / 2.0), np.sin(psi / 2.0)
            den = -s * w0 + c
            z = (c * w0 + s) / den
            # rotation generator plus the moving-ray term through the chain rule
            dz = orientation * (1.0 + z * z) / 2.0 + (1j * drho * np.exp(rho)) / den**2
            dz = y0 * dz
            return np.stack([dz.real, dz.imag], axis=-1)

        return _arclength_reparam(
            S, lift, dlift, 2.0 * math.pi, n_cache, "hyperbolic_perturbed_circle", cfg
        )

    raise DomainError(
        f"no perturbed circles for surface type {type(S).__name__}"
    )


def _batch_speeds(S: Surface, coords: np.ndarray, vels: np.ndarray) -> np.ndarray:
    """Metric norms of chart velocities, vectorized for the model surfaces."""
    if isinstance(S, FlatTorus):
        return np.hypot(vels[:, 0], vels[:, 1])
    if isinstance(S, HyperbolicPlane):
        return np.hypot(vels[:, 0], vels[:, 1]) / (S.a * coords[:, 1])
    if isinstance(S, RoundSphere):
        return np.sqrt(
            (S.R * np.sin(coords[:, 1]) * vels[:, 0]) ** 2 + (S.R * vels[:, 1]) ** 2
        )
    return np.array(
        [
            S.norm(TangentVec(SurfacePoint(*c), *v))
            for c, v in zip(coords, vels)
        ]
    )


def _reduce_coords(S: Surface, coords: np.ndarray) -> np.ndarray:
    out = np.array(coords, dtype=float)
    if isinstance(S, FlatTorus):
        out[..., 0] %= S.L1
        out[..., 1] %= S.L2
    elif isinstance(S, RoundSphere):
        out[..., 0] %= 2.0 * math.pi
    return out


def _arclength_reparam(S, lift, dlift, period_raw, n_cache, name, cfg, n_fine=16384):
    """Unit-speed curve from periodic coordinate functions of a raw parameter.

    The cumulative arclength is integrated on a fine grid and inverted with
    a monotone cubic; the analytic velocity is the raw chart derivative
    normalized in the metric, so unit speed holds to interpolation accuracy.
    """
    taus = np.linspace(0.0, period_raw, n_fine + 1)
    coords = _reduce_coords(S, lift(taus))
    speeds = _batch_speeds(S, coords, dlift(taus))
    if float(np.min(speeds)) <= 1e-9:
        raise ValueError("degenerate parametrization: vanishing raw speed")
    s = cumulative_simpson(speeds, x=taus, initial=0.0)
    L = float(s[-1])
    tau_of_s = PchipInterpolator(s, taus)

    def param(t):
        tau = float(tau_of_s(t % L))
        c = _reduce_coords(S, lift(np.array([tau]))[0])
        return S.point(c[0], c[1])

    def d1(t):
        tau = float(tau_of_s(t % L))
        c = _reduce_coords(S, lift(np.array([tau]))[0:1])
        v = dlift(np.array([tau]))[0:1]
        return v[0] / _batch_speeds(S, c, v)[0]

    def batch(ts):
        tau = tau_of_s(np.asarray(ts, dtype=float) % L)
        return _reduce_coords(S, lift(tau))

    return Curve(S, param, L, d1, None, batch, n_cache, name, cfg)


def _from_points_impl(S, t_raw, coords, n_cache, name, cfg):
    t_raw = np.asarray(t_raw, dtype=float)
    coords = np.asarray(coords, dtype=float)
    if len(t_raw) != len(coords) or len(t_raw) < 8:
        raise ValueError("need at least 8 samples with matching parameters")
    if np.any(np.diff(t_raw) <= 0):
        raise ValueError("raw parameters must be strictly increasing")
    pts = [SurfacePoint(*c) for c in coords]
    gap = S.chart_delta(pts[-1], pts[0])
    if math.hypot(*gap) > 1e-6 * max(1.0, float(np.max(np.abs(coords)))):
        raise ValueError("point list is not closed: first and last rows differ")

    # continuous lift: unwrap chart jumps, split off any winding drift
    steps = np.array(
        [S.chart_delta(b, a) for a, b in zip(pts[:-1], pts[1:])]
    )
    lift_pts = np.vstack([coords[0], coords[0] + np.cumsum(steps, axis=0)])
    T = t_raw[-1] - t_raw[0]
    taus = t_raw - t_raw[0]
    drift = lift_pts[-1] - lift_pts[0]
    periodic = lift_pts - np.outer(taus / T, drift)
    periodic[-1] = periodic[0]
    spline = CubicSpline(taus, periodic, axis=0, bc_type="periodic")
    dspline = spline.derivative()

    def lift(ts):
        return spline(ts) + np.outer(np.atleast_1d(ts) / T, drift).reshape(
            np.shape(ts) + (2,)
        )

    def dlift(ts):
        return dspline(ts) + np.broadcast_to(drift / T, np.shape(ts) + (2,))

    return _arclength_reparam(S, lift, dlift, T, n_cache, name, cfg)


def curve_from_csv(S: Surface, path, n_cache: int = 4096) -> Curve:
    """Load a closed curve from CSV columns t,x1,x2 and resample to unit speed."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["t", "x1", "x2"]:
        raise ValueError("curve CSV must start with header 't,x1,x2'")
    data = np.array([[float(c) for c in row] for row in rows[1:] if row])
    if data.shape[0] < 8 or data.shape[1] != 3:
        raise ValueError("curve CSV needs at least 8 data rows of t,x1,x2")
    cfg = {"type": "csv", "path": str(path)}
    return _from_points_impl(
        S, data[:, 0], data[:, 1:], n_cache, f"csv:{path.name}", cfg
    )


def _curve_from_points(S, t_raw, points, n_cache=4096, name="points", config=None):
    coords = np.array(
        [p.coords if isinstance(p, SurfacePoint) else np.asarray(p, float) for p in points]
    )
    return _from_points_impl(S, t_raw, coords, n_cache, name, config)


Curve.from_points = staticmethod(_curve_from_points)


def curve_from_config(S: Surface, cfg) -> Curve:
    """Build a curve from its serialized description."""
    kind = cfg.get("type")
    if kind == "geodesic_circle":
        return geodesic_circle(
            S,
            SurfacePoint(*cfg["center"]),
            cfg["radius"],
            cfg.get("orientation", 1),
            n_cache=cfg.get("n_cache", 4096),
        )
    if kind == "perturbed_circle":
        return perturbed_circle(
            S,
            SurfacePoint(*cfg["center"]),
            cfg["radius"],
            cfg["amp"],
            cfg["mode"],
            cfg.get("orientation", 1),
            n_cache=cfg.get("n_cache", 4096),
        )
    if kind == "torus_geodesic":
        return torus_geodesic(
            S,
            SurfacePoint(*cfg["start"]),
            cfg["winding"],
            n_cache=cfg.get("n_cache", 4096),
        )
    if kind == "csv":
        return curve_from_csv(S, cfg["path"], n_cache=cfg.get("n_cache", 4096))
    raise ValueError(f"unknown curve type {kind!r}")


class FermiChart:
    """Tangent-normal coordinates about a closed curve.

    (x1, x2) maps to the point at distance x2 along the geodesic normal to
    the curve at parameter x1; the normal is the +90-degree rotation of the
    tangent.  Valid inside a tube of the given width.
    """

    def __init__(self, curve: Curve, width: float = 0.5):
        if width <= 0:
            raise ValueError("tube width must be positive")
        self.curve = curve
        self.width = float(width)

    def normal(self, t: float) -> TangentVec:
        S = self.curve.surface
        v = self.curve.tangent(t)
        n = S.rotate90(v)
        return S.unit_vector(n.base, n.v1, n.v2)

    def map(self, x1: float, x2: float) -> SurfacePoint:
        if x2 == 0.0:
            return self.curve.point(x1)
        S = self.curve.surface
        return S.geodesic_flow(self.curve.point(x1), self.normal(x1), x2)[0]

    def jacobian(self, x1: float, x2: float, h: float = 1e-6) -> np.ndarray:
        S = self.curve.surface
        J = np.empty((2, 2))
        for col, (e1, e2) in enumerate(((1.0, 0.0), (0.0, 1.0))):
            plus = self.map(x1 + h * e1, x2 + h * e2)
            minus = self.map(x1 - h * e1, x2 - h * e2)
            J[:, col] = S.chart_delta(plus, minus) / (2.0 * h)
        return J


def fermi_coordinates(chart: FermiChart, p: SurfacePoint):
    """Invert the Fermi map by Newton iteration; returns (x1, x2).

    The initial guess comes from the nearest cached curve sample; points
    outside the tube raise a domain error, stalled iterations after 50
    steps raise a convergence error.
    """
    curve = chart.curve
    S = curve.surface
    deltas = np.array([S.chart_delta(p, SurfacePoint(*c)) for c in curve.points])
    metrics = np.array([S.metric_at(SurfacePoint(*c)) for c in curve.points])
    d2 = np.einsum("ni,nij,nj->n", deltas, metrics, deltas)
    i0 = int(np.argmin(d2))
    t0 = float(curve.t_grid[i0])
    dist0 = math.sqrt(float(d2[i0]))
    if dist0 > 4.0 * chart.width:
        raise DomainError(
            f"point {p} is far outside the Fermi tube (approx distance {dist0:.3g})"
        )
    n0 = chart.normal(t0)
    x = np.array(
        [t0, float(deltas[i0] @ metrics[i0] @ np.array([n0.v1, n0.v2]))]
    )
    scale = 1.0 + abs(p.x1) + abs(p.x2)
    for _ in range(50):
        F = S.chart_delta(chart.map(x[0], x[1]), p)
        if math.hypot(*F) <= 1e-12 * scale:
            break
        J = chart.jacobian(x[0], x[1])
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Fermi jacobian at {tuple(x)}") from exc
        x -= step
        x[0] %= curve.period
    else:
        raise ConvergenceError(f"Fermi inversion stalled near {tuple(x)}")
    if abs(x[1]) > chart.width:
        raise DomainError(
            f"point {p} outside the Fermi tube: normal coordinate {x[1]:.3g}"
        )
    return float(x[0]), float(x[1])
