import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import jv

from geoperiods import (
    FlatTorus,
    FrequencyGridError,
    HyperbolicPlane,
    RangeError,
    RoundSphere,
    SphereHighestWeight,
    SphereZonal,
    SurfacePoint,
    TorusWave,
    UnsupportedSurfaceError,
)
from geoperiods.curve import Curve, geodesic_circle
from geoperiods.periods import PeriodResult, generalized_period, period_spectrum

TORUS = FlatTorus(2 * math.pi, 2 * math.pi)
SPH = RoundSphere(1.0)
CENTER = SurfacePoint(math.pi, math.pi)


def flat_circle(r, n_cache=256):
    return geodesic_circle(TORUS, CENTER, r, n_cache=n_cache)


class TestConstantFunction:
    def test_zero_frequency_gives_length(self):
        e = TorusWave(TORUS, (0, 0))
        c = flat_circle(0.5)
        res = generalized_period(e, c, 0.0)
        assert res.coeff == pytest.approx(c.length, abs=1e-12)
        assert isinstance(res, PeriodResult)
        assert res.lam == 0.0
        assert math.isfinite(res.err_est)
        assert res.runtime >= 0.0
        assert res.N >= 256 and res.N & (res.N - 1) == 0

    def test_nonzero_frequencies_vanish(self):
        e = TorusWave(TORUS, (0, 0))
        c = flat_circle(0.5)
        w = 2 * math.pi / c.length
        for m in (1, 5, -3):
            assert abs(generalized_period(e, c, m * w).coeff) <= 1e-12

    def test_nu_snapped_to_grid(self):
        e = TorusWave(TORUS, (0, 0))
        c = flat_circle(0.5)
        w = 2 * math.pi / c.length
        res = generalized_period(e, c, 3 * w * (1.0 + 1e-12))
        assert res.nu == 3 * w


class TestBesselIdentity:
    # unit-speed circle of radius r against the plane wave exp(i<k, x>):
    # coeff(m) = 2 pi r i^m J_m(r |k|) exp(i<k, c>) exp(-i m theta_k)
    def test_exact_coefficients(self):
        e = TorusWave(TORUS, (3, 4))
        r = 0.7
        c = flat_circle(r)
        theta_k = math.atan2(4.0, 3.0)
        phase_c = np.exp(1j * (3.0 * CENTER.x1 + 4.0 * CENTER.x2))
        w = 2 * math.pi / c.length
        for m in (0, 2, -3):
            got = generalized_period(e, c, m * w).coeff
            want = (
                2.0 * math.pi * r * 1j**m * jv(m, r * e.frequency)
                * phase_c * np.exp(-1j * m * theta_k)
            )
            assert got == pytest.approx(complex(want), abs=1e-12)

    def test_adaptive_quadrature_oracle(self):
        e = TorusWave(TORUS, (3, 4))
        r = 0.7
        c = flat_circle(r)
        m = 2
        nu = 2 * math.pi * m / c.length

        def integrand(s, part):
            p = c.point(s)
            val = complex(np.exp(1j * (3.0 * p.x1 + 4.0 * p.x2 - nu * s)))
            return val.real if part == 0 else val.imag

        re_, _ = quad(integrand, 0.0, c.length, args=(0,), limit=400)
        im_, _ = quad(integrand, 0.0, c.length, args=(1,), limit=400)
        got = generalized_period(e, c, nu).coeff
        assert got == pytest.approx(complex(re_, im_), abs=1e-10)


class TestSphereFamilies:
    def test_highest_weight_single_spike(self):
        n = 12
        e = SphereHighestWeight(SPH, n)
        eq = geodesic_circle(SPH, SPH.point(0.0, 0.0), math.pi / 2, n_cache=256)
        spike = generalized_period(e, eq, float(n)).coeff
        assert spike == pytest.approx(2.0 * math.pi * e.normalization, abs=1e-12)
        for m in (-n, 0, n - 1):
            assert abs(generalized_period(e, eq, float(m)).coeff) <= 1e-12

    def test_zonal_equator_mean(self):
        eq = geodesic_circle(SPH, SPH.point(0.0, 0.0), math.pi / 2, n_cache=256)
        even = generalized_period(SphereZonal(SPH, 40), eq, 0.0).coeff
        assert abs(even) == pytest.approx(2.0, rel=0.05)
        odd = generalized_period(SphereZonal(SPH, 41), eq, 0.0).coeff
        assert abs(odd) <= 1e-10


class TestSpectrum:
    def test_constant_delta(self):
        e = TorusWave(TORUS, (0, 0))
        c = flat_circle(0.5)
        spectrum = period_spectrum(e, c, 6)
        assert spectrum.coefficient(0) == pytest.approx(c.length, abs=1e-12)
        for m in range(-6, 7):
            if m:
                assert abs(spectrum.coefficient(m)) <= 1e-12

    def test_matches_direct_rule(self):
        e = TorusWave(TORUS, (3, 4))
        c = flat_circle(0.7)
        spectrum = period_spectrum(e, c, 8)
        rng = np.random.default_rng(23)
        w = 2 * math.pi / c.length
        for m in rng.integers(-8, 9, size=5):
            direct = generalized_period(e, c, float(m) * w, N=spectrum.N).coeff
            assert abs(spectrum.coefficient(int(m)) - direct) <= 1e-10

    def test_conjugate_symmetry_for_real_function(self):
        e = SphereZonal(SPH, 25)
        c = geodesic_circle(SPH, SPH.point(0.0, 0.0), 1.0, n_cache=256)
        spectrum = period_spectrum(e, c, 10)
        for m in range(1, 11):
            assert spectrum.coefficient(-m) == pytest.approx(
                np.conj(spectrum.coefficient(m)), abs=1e-10
            )

    def test_bin_guards(self):
        e = TorusWave(TORUS, (1, 0))
        c = flat_circle(0.5)
        spectrum = period_spectrum(e, c, 4)
        with pytest.raises(RangeError):
            spectrum.coefficient(5)
        with pytest.raises(RangeError):
            period_spectrum(e, c, 100, N=256)
        assert period_spectrum(e, c, 0).coefficients.shape == (1,)


class TestConvergence:
    def test_oversampling_stability(self):
        cases = [
            (TorusWave(TORUS, (3, 4)), flat_circle(0.7), 2),
            (
                SphereHighestWeight(SPH, 12),
                geodesic_circle(SPH, SPH.point(0.0, 0.0), math.pi / 2, n_cache=256),
                12,
            ),
        ]
        for e, c, m in cases:
            nu = 2 * math.pi * m / c.length
            auto = generalized_period(e, c, nu)
            doubled = generalized_period(e, c, nu, N=2 * auto.N)
            assert abs(auto.coeff - doubled.coeff) <= 1e-9
            assert auto.err_est <= 1e-8 * (1.0 + abs(auto.coeff))

    def test_shift_covariance(self):
        e = TorusWave(TORUS, (3, 4))
        base = flat_circle(0.7)
        shift = 0.37
        moved = Curve(
            TORUS,
            lambda t: base.point(t + shift),
            base.period,
            d1=lambda t: base.velocity(t + shift),
            batch=lambda ts: base.points_at(np.asarray(ts) + shift),
            n_cache=256,
        )
        w = 2 * math.pi / base.length
        for m in (0, 2, -5):
            nu = m * w
            a = generalized_period(e, base, nu).coeff
            b = generalized_period(e, moved, nu).coeff
            assert b == pytest.approx(np.exp(1j * nu * shift) * a, abs=1e-10)


class TestValidation:
    def test_off_grid_frequency(self):
        e = TorusWave(TORUS, (1, 0))
        c = flat_circle(0.5)
        w = 2 * math.pi / c.length
        for bad in (0.5 * w, 1.5 * w, w * (1.0 + 5e-9)):
            with pytest.raises(FrequencyGridError):
                generalized_period(e, c, bad)

    def test_surface_mismatch(self):
        e = TorusWave(TORUS, (1, 0))
        hyp_circle = geodesic_circle(HyperbolicPlane(1.0), SurfacePoint(0.0, 1.0), 1.0, n_cache=256)
        with pytest.raises(UnsupportedSurfaceError):
            generalized_period(e, hyp_circle, 0.0)
        other = TorusWave(FlatTorus(2 * math.pi, math.pi), (1, 0))
        with pytest.raises(UnsupportedSurfaceError):
            period_spectrum(other, flat_circle(0.5), 2)

    def test_sample_count_guards(self):
        e = TorusWave(TORUS, (1, 0))
        c = flat_circle(0.5)
        for bad in (8, 255, 257):
            with pytest.raises(ValueError):
                generalized_period(e, c, 0.0, N=bad)
