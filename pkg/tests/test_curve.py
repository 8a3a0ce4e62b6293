import math

import numpy as np
import pytest

from geoperiods import (
    ConformalSurface,
    ConvergenceError,
    DomainError,
    FlatTorus,
    HyperbolicPlane,
    RangeError,
    RoundSphere,
    SurfacePoint,
    half_plane_field,
)
from geoperiods.curve import (
    Curve,
    FermiChart,
    curve_from_config,
    curve_from_csv,
    fermi_coordinates,
    geodesic_circle,
    geodesic_curvature,
    perturbed_circle,
    signed_normal_curvature,
    torus_geodesic,
)
from geoperiods.jacobi import circle_curvature

TORUS = FlatTorus(2 * math.pi, 2 * math.pi)
HYP = HyperbolicPlane(1.0)
CENTER_T = SurfacePoint(math.pi, math.pi)
CENTER_H = SurfacePoint(0.0, 1.0)


class TestConstruction:
    def test_flat_circle_length(self):
        c = geodesic_circle(TORUS, CENTER_T, 1.0)
        assert c.length == pytest.approx(2 * math.pi, abs=1e-6)

    def test_hyperbolic_circle_length(self):
        c = geodesic_circle(HYP, CENTER_H, 1.0)
        assert c.length == pytest.approx(2 * math.pi * math.sinh(1.0), abs=1e-6)

    def test_sphere_equator(self):
        S = RoundSphere(1.0)
        c = geodesic_circle(S, S.point(0.0, 0.0), math.pi / 2)
        assert c.length == pytest.approx(2 * math.pi, abs=1e-6)
        assert np.allclose(c.points[:, 1], math.pi / 2)

    def test_radius_guard(self):
        for bad in (0.0, 1e-3, 51.0):
            with pytest.raises(RangeError):
                geodesic_circle(TORUS, CENTER_T, bad)

    def test_open_param_rejected(self):
        with pytest.raises(ValueError):
            Curve(TORUS, lambda t: TORUS.point(t, 0.0), math.pi)  # half a winding

    def test_nonunit_speed_rejected(self):
        with pytest.raises(ValueError):
            Curve(
                TORUS,
                lambda t: TORUS.point(2 * math.cos(t), 2 * math.sin(t)),
                2 * math.pi,  # radius 2 traversed in parameter length 2*pi
            )

    def test_cache_shapes(self):
        c = geodesic_circle(TORUS, CENTER_T, 0.5, n_cache=256)
        assert c.points.shape == (256, 2)
        assert c.velocities.shape == (256, 2)
        assert c.accelerations.shape == (256, 2)

    def test_batch_matches_scalar(self):
        for c in (
            geodesic_circle(TORUS, CENTER_T, 0.5),
            geodesic_circle(HYP, CENTER_H, 1.0),
        ):
            ts = np.linspace(0.0, c.length, 7)
            batch = c.points_at(ts)
            single = np.array([c.point(t).coords for t in ts])
            assert np.allclose(batch, single, atol=1e-12)


class TestCurvature:
    def test_torus_geodesic_is_flat(self):
        line = torus_geodesic(TORUS, TORUS.point(0.0, 0.0), (1, 0))
        for t in (0.0, 1.0, 4.5):
            assert abs(geodesic_curvature(line, t)) <= 1e-7
            assert abs(signed_normal_curvature(line, t)) <= 1e-7

    def test_flat_circle_counterclockwise(self):
        c = geodesic_circle(TORUS, CENTER_T, 0.5, orientation=1)
        for t in (0.0, 0.7, 2.0):
            assert signed_normal_curvature(c, t) == pytest.approx(2.0, abs=1e-8)
            assert geodesic_curvature(c, t) == pytest.approx(2.0, abs=1e-8)

    def test_flat_circle_clockwise(self):
        c = geodesic_circle(TORUS, CENTER_T, 0.5, orientation=-1)
        assert signed_normal_curvature(c, 1.0) == pytest.approx(-2.0, abs=1e-8)

    def test_hyperbolic_circle_coth(self):
        c = geodesic_circle(HYP, CENTER_H, 1.0)
        want = 1.0 / math.tanh(1.0)
        for t in np.linspace(0.0, c.length, 5):
            assert geodesic_curvature(c, t) == pytest.approx(want, abs=1e-6)
            assert signed_normal_curvature(c, t) == pytest.approx(want, abs=1e-6)

    def test_signed_matches_unsigned_on_cache_grid(self):
        for c in (
            geodesic_circle(TORUS, CENTER_T, 0.5, n_cache=64),
            geodesic_circle(HYP, CENTER_H, 2.0, n_cache=64),
            perturbed_circle(HYP, CENTER_H, 1.0, 0.2, 3, n_cache=64),
        ):
            for t in c.t_grid[::8]:
                assert abs(
                    abs(signed_normal_curvature(c, t)) - geodesic_curvature(c, t)
                ) <= 1e-8

    def test_matches_jacobi_circle_curvature(self):
        r = 1.3
        c = geodesic_circle(HYP, CENTER_H, r)
        v = HYP.unit_vector(CENTER_H, 0.0, 1.0)
        want = circle_curvature(HYP, CENTER_H, v, r)
        for t in np.linspace(0.0, c.length, 16, endpoint=False):
            assert geodesic_curvature(c, t) == pytest.approx(want, abs=1e-6)

    def test_shift_invariance(self):
        base = geodesic_circle(HYP, CENTER_H, 1.0)
        shift = 0.37
        shifted = Curve(
            HYP,
            lambda t: base.point(t + shift),
            base.period,
            d1=lambda t: base.velocity(t + shift),
            d2=None,
            n_cache=128,
        )
        for t in (0.0, 1.0, 3.0):
            assert geodesic_curvature(shifted, t) == pytest.approx(
                geodesic_curvature(base, t + shift), abs=1e-9
            )

    def test_conformal_circle_curvature(self):
        S = ConformalSurface(half_plane_field(1.0), (-50.0, 50.0, 0.0, 1e6))
        r = 1.0
        c = geodesic_circle(S, SurfacePoint(0.0, 1.0), r, n_cache=512)
        assert c.length == pytest.approx(2 * math.pi * math.sinh(r), rel=1e-6)
        v = S.unit_vector(SurfacePoint(0.0, 1.0), 0.0, 1.0)
        want = circle_curvature(S, SurfacePoint(0.0, 1.0), v, r)
        for t in np.linspace(0.0, c.length, 4, endpoint=False):
            assert geodesic_curvature(c, t) == pytest.approx(want, abs=1e-6)


class TestPerturbedCircle:
    def test_zero_amp_matches_circle(self):
        plain = geodesic_circle(HYP, CENTER_H, 1.0)
        pert = perturbed_circle(HYP, CENTER_H, 1.0, 0.0, 3)
        assert pert.length == pytest.approx(plain.length, rel=1e-9)
        assert geodesic_curvature(pert, 0.3) == pytest.approx(
            geodesic_curvature(plain, 0.3), abs=1e-6
        )

    def test_flat_ellipse_like(self):
        pert = perturbed_circle(TORUS, CENTER_T, 0.7, 0.15, 2)
        ks = [signed_normal_curvature(pert, t) for t in pert.t_grid[::64]]
        # curvature oscillates but the curve stays convex at small amplitude
        assert min(ks) > 0.0
        assert max(ks) > min(ks) + 0.1

    def test_amp_guard(self):
        with pytest.raises(RangeError):
            perturbed_circle(TORUS, CENTER_T, 0.5, 1.0, 2)

    def test_unit_speed_on_grid(self):
        pert = perturbed_circle(HYP, CENTER_H, 1.0, 0.25, 3)
        speeds = [
            HYP.norm(pert.tangent(t)) for t in np.linspace(0, pert.length, 33)
        ]
        assert max(abs(s - 1.0) for s in speeds) <= 1e-6


class TestCsvIngestion:
    def make_csv(self, tmp_path, n=2048):
        c = geodesic_circle(HYP, CENTER_H, 1.0)
        ts = np.linspace(0.0, c.length, n + 1)
        pts = c.points_at(ts)
        pts[-1] = pts[0]
        lines = ["t,x1,x2"]
        lines += [
            f"{float(t)!r},{float(x)!r},{float(y)!r}" for t, (x, y) in zip(ts, pts)
        ]
        path = tmp_path / "circle.csv"
        path.write_text("\n".join(lines) + "\n")
        return path, c

    def test_round_trip(self, tmp_path):
        path, ref = self.make_csv(tmp_path)
        loaded = curve_from_csv(HYP, path, n_cache=512)
        assert loaded.length == pytest.approx(ref.length, rel=1e-8)
        for t in (0.0, 1.5, 4.0):
            d = HYP.distance(loaded.point(t), ref.point(t))
            assert d <= 1e-6
        assert geodesic_curvature(loaded, 2.0) == pytest.approx(
            1.0 / math.tanh(1.0), rel=1e-4
        )

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n0,0,1\n")
        with pytest.raises(ValueError):
            curve_from_csv(HYP, path)

    def test_not_closed(self, tmp_path):
        ts = np.linspace(0.0, 1.0, 32)
        rows = ["t,x1,x2"] + [f"{t},{t},1.0" for t in ts]
        path = tmp_path / "open.csv"
        path.write_text("\n".join(rows))
        with pytest.raises(ValueError):
            curve_from_csv(HYP, path)

    def test_winding_torus_csv(self, tmp_path):
        # a (1,0) winding line stored in reduced coordinates
        ts = np.linspace(0.0, 2 * math.pi, 257)
        rows = ["t,x1,x2"] + [
            f"{float(t)!r},{float(t) % (2 * math.pi)!r},1.0" for t in ts
        ]
        path = tmp_path / "wind.csv"
        path.write_text("\n".join(rows))
        loaded = curve_from_csv(TORUS, path, n_cache=256)
        assert loaded.length == pytest.approx(2 * math.pi, rel=1e-9)
        assert abs(geodesic_curvature(loaded, 1.0)) <= 1e-6


class TestConfigRoundTrip:
    def test_builtins(self):
        for S, c in (
            (TORUS, geodesic_circle(TORUS, CENTER_T, 0.5, -1)),
            (HYP, perturbed_circle(HYP, CENTER_H, 1.0, 0.2, 3)),
            (TORUS, torus_geodesic(TORUS, TORUS.point(0.0, 0.0), (1, 2))),
        ):
            c2 = curve_from_config(S, c.to_config())
            assert c2.length == pytest.approx(c.length, rel=1e-12)
            assert np.allclose(
                c2.points_at([0.3, 1.1]), c.points_at([0.3, 1.1]), atol=1e-9
            )


class TestFermi:
    def test_on_curve_points(self):
        c = geodesic_circle(HYP, CENTER_H, 1.0)
        chart = FermiChart(c)
        for t0 in (0.0, 1.0, 5.0):
            x1, x2 = fermi_coordinates(chart, c.point(t0))
            assert x1 == pytest.approx(t0 % c.period, abs=1e-8)
            assert x2 == pytest.approx(0.0, abs=1e-8)

    def test_flat_line_is_cartesian(self):
        line = torus_geodesic(TORUS, TORUS.point(0.0, 0.0), (1, 0))
        chart = FermiChart(line)
        x1, x2 = fermi_coordinates(chart, SurfacePoint(0.3, 0.2))
        assert (x1, x2) == pytest.approx((0.3, 0.2), abs=1e-9)

    def test_hyperbolic_normal_offset(self):
        c = geodesic_circle(HYP, CENTER_H, 1.0)
        chart = FermiChart(c)
        t0 = 2.0
        p = HYP.geodesic_flow(c.point(t0), chart.normal(t0), 0.1)[0]
        x1, x2 = fermi_coordinates(chart, p)
        assert x1 == pytest.approx(t0, abs=1e-7)
        assert x2 == pytest.approx(0.1, abs=1e-7)

    def test_round_trip(self):
        c = geodesic_circle(TORUS, CENTER_T, 0.8)
        chart = FermiChart(c)
        p = SurfacePoint(math.pi + 1.0, math.pi + 0.4)
        x1, x2 = fermi_coordinates(chart, p)
        q = chart.map(x1, x2)
        assert math.hypot(*TORUS.chart_delta(q, p)) <= 1e-8

    def test_outside_tube(self):
        c = geodesic_circle(HYP, CENTER_H, 1.0)
        chart = FermiChart(c, width=0.5)
        with pytest.raises(DomainError):
            fermi_coordinates(chart, SurfacePoint(0.0, 25.0))

    def test_metric_identity_on_axis(self):
        for c in (
            geodesic_circle(HYP, CENTER_H, 1.0),
            geodesic_circle(TORUS, CENTER_T, 0.8),
        ):
            chart = FermiChart(c)
            S = c.surface
            for t in (0.0, 1.3, 4.4):
                J = chart.jacobian(t, 0.0)
                g = S.metric_at(chart.map(t, 0.0))
                pulled = J.T @ g @ J
                assert np.allclose(pulled, np.eye(2), atol=1e-7)
