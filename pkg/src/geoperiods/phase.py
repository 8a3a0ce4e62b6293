"""Phase functions of a closed curve paired with a deck transformation.

For a unit-speed closed curve gamma lifted to the universal cover and a
deck transformation alpha, the oscillatory phase at frequency ratio eps is

    phi(t, s) = eps (t - s) + r(t, s),    r(t, s) = d(lift(t), alpha lift(s)).

First derivatives come from the first variation of arc length: with sigma
the unit-speed geodesic from lift(t) to alpha lift(s),

    d_t r = -<sigma'(0), lift'(t)>,    d_s r = <sigma'(r), (alpha lift)'(s)>,

so both gradient entries are cosines shifted by +-eps.  Pure second
derivatives use the second variation: the distance Hessian transverse to
sigma is the curvature of the geodesic circle through the moving endpoint
about the fixed one, giving

    d2_s phi = kappa_circle(r) (1 - (d_s r)^2) + <sigma'(r), D/ds (alpha lift)'(s)>

and symmetrically in t with sigma reversed; the inner-product term carries
the sign of the curve's normal acceleration against the connecting
direction.  The mixed entry has no such identity and is always computed by
finite differences of the gradient.

Distances below 0.1 are rejected: the phase analysis lives in the separated
regime and the first-variation formulas degenerate at coincident points.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .curve import Curve, signed_normal_curvature
from .errors import ConvergenceError, ProximityError, RangeError
from .jacobi import circle_curvature
from .surface import DeckTransform, FlatTorus, SurfacePoint, TangentVec

_MIN_SEPARATION = 0.1
_H1 = 1e-3  # first-derivative step
_H2 = 3e-3  # second-derivative step, Richardson-extrapolated once


def _smoothstep7(x: float) -> float:
    """Order-7 polynomial ramp: 0 below 0, 1 above 1, C^3 at the joins."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return x**4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))


class _LiftedPair:
    """Lift of a closed curve plus the deck image, with cached unwrapping.

    On simply connected charts the parametrization already lives on the
    cover.  On a torus the cached sample points are unwrapped once by
    accumulating reduced chart steps, and arbitrary parameters resolve to
    nearest-cached-sample plus a reduced correction, plus whole-period
    winding displacements.
    """

    def __init__(self, gamma: Curve, alpha: DeckTransform):
        self.gamma = gamma
        self.alpha = alpha
        self.S = gamma.surface
        if isinstance(self.S, FlatTorus):
            pts = gamma.points
            L1, L2 = self.S.L1, self.S.L2
            steps = np.diff(pts, axis=0, append=pts[:1])
            steps[:, 0] = (steps[:, 0] + L1 / 2.0) % L1 - L1 / 2.0
            steps[:, 1] = (steps[:, 1] + L2 / 2.0) % L2 - L2 / 2.0
            spacing = gamma.period / len(pts)
            if spacing >= min(L1, L2) / 4.0:
                raise ValueError("curve cache too coarse to lift unambiguously")
            lifted = pts[0] + np.concatenate(
                [np.zeros((1, 2)), np.cumsum(steps, axis=0)]
            )
            self._grid = lifted[:-1]
            self._winding = lifted[-1] - lifted[0]
            self._spacing = spacing

    def lift(self, t: float) -> SurfacePoint:
        if not isinstance(self.S, FlatTorus):
            return self.gamma.point(t)
        L = self.gamma.period
        k = math.floor(t / L)
        tau = t - k * L
        i = min(int(tau / self._spacing), len(self._grid) - 1)
        p = self.gamma.point(tau)
        delta = self.S.chart_delta(p, self.S.point(*self._grid[i]))
        c = self._grid[i] + delta + k * self._winding
        return SurfacePoint(c[0], c[1])

    def dlift(self, t: float) -> TangentVec:
        v = self.gamma.velocity(t)
        return TangentVec(self.lift(t), v[0], v[1])

    def moved(self, s: float) -> SurfacePoint:
        return self.alpha.apply_point(self.S, self.lift(s))

    def moved_velocity(self, s: float) -> TangentVec:
        return self.alpha.apply_tangent(self.S, self.dlift(s))

    def moved_acceleration(self, s: float) -> TangentVec:
        a = self.gamma.covariant_acceleration(s)
        return self.alpha.apply_tangent(self.S, TangentVec(self.lift(s), a[0], a[1]))

    # -- phase values and derivatives -----------------------------------------

    def connection(self, t: float, s: float):
        p = self.lift(t)
        q = self.moved(s)
        r, vp, vq = self.S.connecting_geodesic(p, q, lifted=True)
        if r < _MIN_SEPARATION:
            raise ProximityError(
                f"separation {r} below {_MIN_SEPARATION}; the phase analysis"
                " needs the curve and its deck image well apart"
            )
        return r, vp, vq

    def value(self, eps: float, t: float, s: float) -> float:
        r, _, _ = self.connection(t, s)
        return eps * (t - s) + r

    def gradient(self, eps: float, t: float, s: float):
        r, vp, vq = self.connection(t, s)
        dr_t = -self.S.inner(vp, self.dlift(t))
        dr_s = self.S.inner(vq, self.moved_velocity(s))
        return eps + dr_t, -eps + dr_s

    def second_s(self, t: float, s: float):
        """(d2_s phi, circle curvature, d_s r) at one node."""
        r, vp, vq = self.connection(t, s)
        dr_s = self.S.inner(vq, self.moved_velocity(s))
        kappa = circle_curvature(self.S, self.lift(t), vp, r)
        bend = self.S.inner(vq, self.moved_acceleration(s))
        return kappa * (1.0 - dr_s * dr_s) + bend, kappa, dr_s

    def second_t(self, t: float, s: float) -> float:
        r, vp, vq = self.connection(t, s)
        dr_t = -self.S.inner(vp, self.dlift(t))
        back = TangentVec(vq.base, -vq.v1, -vq.v2)
        kappa = circle_curvature(self.S, self.moved(s), back, r)
        a = self.gamma.covariant_acceleration(t)
        bend = -self.S.inner(vp, TangentVec(self.lift(t), a[0], a[1]))
        return kappa * (1.0 - dr_t * dr_t) + bend

    def mixed(self, eps: float, t: float, s: float) -> float:
        def diff(h):
            up = self.gradient(eps, t + h, s)[1]
            dn = self.gradient(eps, t - h, s)[1]
            return (up - dn) / (2.0 * h)

        return (4.0 * diff(_H2) - diff(2.0 * _H2)) / 3.0

    def hessian(self, eps: float, t: float, s: float):
        return self.second_t(t, s), self.mixed(eps, t, s), self.second_s(t, s)[0]

    def hessian_fd(self, eps: float, t: float, s: float):
        """Pure value-level central differences, Richardson-extrapolated."""

        def entries(h):
            f0 = self.value(eps, t, s)
            tt = (
                self.value(eps, t + h, s) - 2.0 * f0 + self.value(eps, t - h, s)
            ) / h**2
            ss = (
                self.value(eps, t, s + h) - 2.0 * f0 + self.value(eps, t, s - h)
            ) / h**2
            ts = (
                self.value(eps, t + h, s + h)
                - self.value(eps, t + h, s - h)
                - self.value(eps, t - h, s + h)
                + self.value(eps, t - h, s - h)
            ) / (4.0 * h**2)
            return np.array([tt, ts, ss])

        out = (4.0 * entries(_H2) - entries(2.0 * _H2)) / 3.0
        return float(out[0]), float(out[1]), float(out[2])


def phase(gamma: Curve, alpha: DeckTransform, eps: float, t: float, s: float) -> float:
    """eps (t - s) plus the cover distance from lift(t) to alpha lift(s)."""
    return _LiftedPair(gamma, alpha).value(eps, t, s)


def phase_gradient(
    gamma: Curve, alpha: DeckTransform, eps: float, t: float, s: float
) -> tuple[float, float]:
    """(d_t phi, d_s phi) by the first-variation cosine formulas."""
    return _LiftedPair(gamma, alpha).gradient(eps, t, s)


def phase_hessian(
    gamma: Curve, alpha: DeckTransform, eps: float, t: float, s: float
) -> tuple[float, float, float]:
    """(d2_t phi, d_t d_s phi, d2_s phi); the mixed entry is differenced."""
    return _LiftedPair(gamma, alpha).hessian(eps, t, s)


class PhaseGrid:
    """Phase data tabulated over a rectangular (t, s) parameter grid.

    Stores the separation r, the value phi, both first-variation gradient
    components, the Hessian by the geometric formulas, and the same
    Hessian by pure value-level finite differences for cross-checking.
    ``t_grid``/``s_grid`` may be arrays or point counts (uniform over one
    period).  Rows are independent, so ``jobs`` may fan them out.
    """

    def __init__(self, gamma, alpha, eps, t_grid, s_grid, jobs: int = 1):
        if alpha.is_identity():
            raise ValueError("phase grids need a nontrivial deck transformation")
        self.gamma = gamma
        self.alpha = alpha
        self.eps = float(eps)
        self.t_grid = self._as_grid(t_grid, gamma.period)
        self.s_grid = self._as_grid(s_grid, gamma.period)
        pair = _LiftedPair(gamma, alpha)
        nt, ns = len(self.t_grid), len(self.s_grid)
        self.r = np.empty((nt, ns))
        self.phi = np.empty((nt, ns))
        self.grad = (np.empty((nt, ns)), np.empty((nt, ns)))
        self.hess = tuple(np.empty((nt, ns)) for _ in range(3))
        self.hess_fd = tuple(np.empty((nt, ns)) for _ in range(3))

        def fill_row(i):
            t = self.t_grid[i]
            for j, s in enumerate(self.s_grid):
                r, _, _ = pair.connection(t, s)
                self.r[i, j] = r
                self.phi[i, j] = pair.value(self.eps, t, s)
                g = pair.gradient(self.eps, t, s)
                self.grad[0][i, j], self.grad[1][i, j] = g
                h = pair.hessian(self.eps, t, s)
                fd = pair.hessian_fd(self.eps, t, s)
                for k in range(3):
                    self.hess[k][i, j] = h[k]
                    self.hess_fd[k][i, j] = fd[k]

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                list(pool.map(fill_row, range(nt)))
        else:
            for i in range(nt):
                fill_row(i)
        bound = 1.0 + abs(self.eps) + 1e-9
        worst = max(np.max(np.abs(self.grad[0])), np.max(np.abs(self.grad[1])))
        if worst > bound:
            raise ConvergenceError(
                f"gradient magnitude {worst} breaks the cosine bound {bound}"
            )

    @staticmethod
    def _as_grid(points, period):
        if np.isscalar(points):
            n = int(points)
            if n < 2:
                raise ValueError("grids need at least 2 points")
            return np.arange(n) * (period / n)
        g = np.asarray(points, dtype=float)
        if g.ndim != 1 or g.size < 2:
            raise ValueError("grids must be 1-d with at least 2 points")
        return g

    def csv_text(self) -> str:
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [
                "t", "s", "r", "phi", "dphi_t", "dphi_s",
                "d2phi_tt", "d2phi_ts", "d2phi_ss",
                "fd_tt", "fd_ts", "fd_ss",
            ]
        )
        for i, t in enumerate(self.t_grid):
            for j, s in enumerate(self.s_grid):
                row = [
                    t, s, self.r[i, j], self.phi[i, j],
                    self.grad[0][i, j], self.grad[1][i, j],
                    self.hess[0][i, j], self.hess[1][i, j], self.hess[2][i, j],
                    self.hess_fd[0][i, j], self.hess_fd[1][i, j],
                    self.hess_fd[2][i, j],
                ]
                writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


@dataclass(frozen=True)
class CriticalPoint:
    """A gradient zero with its incidence cosines and Hessian determinant sign.

    At a converged point the connecting geodesic meets the curve with
    cosine -eps at t and its deck image with cosine +eps at s.
    """

    t: float
    s: float
    cos_t: float
    cos_s: float
    det_sign: int


def critical_points(
    gamma: Curve, alpha: DeckTransform, eps: float, seeds
) -> list[CriticalPoint]:
    """Newton search for gradient zeros from the supplied (t, s) seeds.

    Seeds that diverge, hit a singular Hessian, or wander into the
    proximity-rejected region are skipped.  Converged points are deduped by
    the lifted endpoint pair, so period copies of one incidence collapse
    while genuinely distinct winding sheets stay apart.
    """
    if abs(eps) > 1.0 - 1e-3:
        raise RangeError("frequency ratio must satisfy |eps| <= 1 - 1e-3")
    pair = _LiftedPair(gamma, alpha)
    found: list[CriticalPoint] = []
    keys: list[np.ndarray] = []
    for t0, s0 in seeds:
        x = np.array([float(t0), float(s0)])
        ok = False
        try:
            for _ in range(50):
                g = np.array(pair.gradient(eps, x[0], x[1]))
                if np.max(np.abs(g)) <= 1e-8:
                    ok = True
                    break
                htt, hts, hss = pair.hessian(eps, x[0], x[1])
                J = np.array([[htt, hts], [hts, hss]])
                if abs(np.linalg.det(J)) < 1e-14:
                    break
                step = np.linalg.solve(J, -g)
                limit = 0.2 * gamma.period
                scale = np.max(np.abs(step))
                if scale > limit:
                    step *= limit / scale
                x = x + step
        except ProximityError:
            continue
        if not ok:
            continue
        r, vp, vq = pair.connection(x[0], x[1])
        cos_t = pair.S.inner(
            TangentVec(vp.base, -vp.v1, -vp.v2), pair.dlift(x[0])
        )
        cos_s = pair.S.inner(vq, pair.moved_velocity(x[1]))
        htt, hts, hss = pair.hessian(eps, x[0], x[1])
        det = htt * hss - hts * hts
        point = CriticalPoint(
            float(x[0]), float(x[1]), float(cos_t), float(cos_s),
            int(math.copysign(1.0, det)) if det != 0.0 else 0,
        )
        key = (pair.lift(x[0]).coords, pair.moved(x[1]).coords)
        # chart coordinates are not metric: match each endpoint relative to
        # its own chart magnitude
        def same(a, b):
            return np.max(np.abs(a - b)) <= 1e-6 * (1.0 + np.max(np.abs(b)))

        if not any(
            same(key[0], other[0]) and same(key[1], other[1]) for other in keys
        ):
            found.append(point)
            keys.append(key)
    return found


@dataclass(frozen=True)
class ConeWeights:
    """Partition-of-unity weights of a direction against the normal cone."""

    w_plus: float
    w_zero: float
    w_minus: float


def cone_classify(xi, delta: float) -> ConeWeights:
    """Weights of a unit Fermi-frame direction in the three normal cones.

    The upward weight is 1 when the normal component is at least delta/2,
    0 when at most delta/4, with an order-7 polynomial ramp between; the
    downward weight mirrors it, and the tangential weight is the exact
    remainder, so the three always sum to 1.
    """
    x1, x2 = float(xi[0]), float(xi[1])
    if abs(math.hypot(x1, x2) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    if not 0.0 < delta < 1.0:
        raise RangeError("cone parameter delta must lie in (0, 1)")
    lo, hi = delta / 4.0, delta / 2.0

    def ramp(c):
        return _smoothstep7((c - lo) / (hi - lo))

    w_plus = ramp(x2)
    w_minus = ramp(-x2)
    return ConeWeights(w_plus, 1.0 - w_plus - w_minus, w_minus)


@dataclass(frozen=True)
class StationarityReport:
    """Outcome of the curvature-margin nondegeneracy check on a window.

    ``hypothesis_met``: the curvature margin exceeded eps0 at every node.
    ``antecedent``: d_s phi vanishes somewhere on the grid (exact zero or
    sign change along s).  ``implication_holds``: no vanishing, or the
    minimum |d2_s phi| clears threshold = sqrt(delta) eps0 / 2 up to 1e-4.
    ``mixed_ok``: at nodes separated by r >= 16/(eps0 sqrt(delta)), the
    mixed derivative stayed within eps0 sqrt(delta) / 8.
    """

    hypothesis_met: bool
    margin_min: float
    antecedent: bool
    implication_holds: bool
    min_abs_dphi_s: float
    min_abs_d2phi_ss: float
    threshold: float
    mixed_nodes: int
    mixed_max: float
    mixed_ok: bool
    eps0: float
    delta: float


def stationarity_check(
    gamma: Curve,
    alpha: DeckTransform,
    eps: float,
    interval,
    eps0: float,
    delta: float,
    n_grid: int = 16,
) -> StationarityReport:
    """Check that stationary slices of the phase are nondegenerate.

    On the window interval x interval: first verify the hypothesis that the
    curve's signed normal curvature stays eps0 away from
    +-sqrt(1 - eps^2) times the connecting-circle curvature at every node;
    then confirm that wherever d_s phi can vanish, |d2_s phi| stays above
    sqrt(delta) eps0 / 2.  A failed hypothesis yields a report, not an
    error.  Far-separated nodes also double-check the mixed-derivative
    bound used to propagate stationarity across t.
    """
    if not eps0 > 0.0:
        raise ValueError("eps0 must be positive")
    if not 0.0 < delta < 1.0:
        raise RangeError("delta must lie in (0, 1)")
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError("interval must have positive length")
    pair = _LiftedPair(gamma, alpha)
    grid = np.linspace(lo, hi, n_grid)
    scale = math.sqrt(max(1.0 - eps * eps, 0.0))
    r_big = 16.0 / (eps0 * math.sqrt(delta))

    margins = np.empty((n_grid, n_grid))
    dphi_s = np.empty((n_grid, n_grid))
    d2_ss = np.empty((n_grid, n_grid))
    mixed_vals = []
    for i, t in enumerate(grid):
        for j, s in enumerate(grid):
            d2, kappa, dr_s = pair.second_s(t, s)
            h = signed_normal_curvature(gamma, s)
            margins[i, j] = min(abs(h + scale * kappa), abs(h - scale * kappa))
            dphi_s[i, j] = -eps + dr_s
            d2_ss[i, j] = d2
            r, _, _ = pair.connection(t, s)
            if r >= r_big:
                mixed_vals.append(abs(pair.mixed(eps, t, s)))

    crossings = np.any(np.diff(np.sign(dphi_s), axis=1) != 0.0) or np.any(
        dphi_s == 0.0
    )
    threshold = math.sqrt(delta) * eps0 / 2.0
    min_d2 = float(np.min(np.abs(d2_ss)))
    implication = (not crossings) or (min_d2 >= threshold - 1e-4)
    mixed_max = float(max(mixed_vals)) if mixed_vals else 0.0
    mixed_ok = mixed_max <= eps0 * math.sqrt(delta) / 8.0 + 1e-9
    return StationarityReport(
        hypothesis_met=bool(np.all(margins > eps0)),
        margin_min=float(margins.min()),
        antecedent=bool(crossings),
        implication_holds=bool(implication),
        min_abs_dphi_s=float(np.min(np.abs(dphi_s))),
        min_abs_d2phi_ss=min_d2,
        threshold=threshold,
        mixed_nodes=len(mixed_vals),
        mixed_max=mixed_max,
        mixed_ok=bool(mixed_ok),
        eps0=eps0,
        delta=delta,
    )
