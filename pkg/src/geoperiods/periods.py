"""Fourier coefficients of eigenfunctions restricted to closed curves.

The central quantity is the integral over one loop of a unit-speed closed
curve gamma of length L,

    coeff(nu) = integral_0^L e(gamma(s)) exp(-i nu s) ds,

for frequencies nu on the curve's dual grid (2 pi / L) * Z.  The integrand
is smooth and L-periodic, so the uniform trapezoid rule converges faster
than any power of the sample count; the sample count is chosen to oversample
the total phase speed lam + |nu| by a factor of 16, and the reported error
estimate is the difference against the rule on every other sample.
Coefficients carry no 1/L normalization.

``period_spectrum`` computes one FFT of the same samples, yielding every
coefficient with |m| <= m_max at once; bin m matches the direct rule at
nu = 2 pi m / L to quadrature accuracy.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .curve import Curve
from .errors import FrequencyGridError, RangeError, UnsupportedSurfaceError

_TWO_PI = 2.0 * math.pi


def _check_same_surface(e, gamma: Curve) -> None:
    if e.surface.to_config() != gamma.surface.to_config():
        raise UnsupportedSurfaceError(
            "eigenfunction and curve are defined on different surfaces"
        )


def _grid_index(nu: float, L: float) -> int:
    m_float = nu * L / _TWO_PI
    m = round(m_float)
    if abs(m_float - m) > 1e-9:
        raise FrequencyGridError(
            f"nu*L/(2 pi) = {m_float} is not an integer; the curve's"
            f" frequency grid has spacing {_TWO_PI / L}"
        )
    return int(m)


def _auto_samples(lam: float, nu: float, L: float) -> int:
    target = max(256.0, 16.0 * (lam + abs(nu)) * L / _TWO_PI)
    return 1 << math.ceil(math.log2(target))


def _check_samples(N) -> int:
    if N != int(N) or int(N) < 16 or int(N) % 2:
        raise ValueError("sample count N must be an even integer >= 16")
    return int(N)


def _sample_values(e, gamma: Curve, N: int):
    s = np.arange(N) * (gamma.period / N)
    return s, e.evaluate_batch(gamma.points_at(s))


@dataclass(frozen=True)
class PeriodResult:
    """One coefficient: frequency pair, value, and quadrature metadata.

    nu is snapped onto the exact grid point 2 pi m / L, err_est is the
    difference against the half-sample rule, runtime is wall-clock seconds.
    """

    nu: float
    lam: float
    coeff: complex
    N: int
    err_est: float
    runtime: float


@dataclass(frozen=True)
class PeriodSpectrum:
    """All coefficients with |m| <= m_max from a single FFT.

    ``coefficients`` is ordered m = -m_max .. m_max; bin m holds the
    coefficient at nu = 2 pi m / L.
    """

    lam: float
    L: float
    m_max: int
    coefficients: np.ndarray
    N: int

    def nu(self, m: int) -> float:
        return _TWO_PI * m / self.L

    def coefficient(self, m: int) -> complex:
        if abs(m) > self.m_max:
            raise RangeError(f"bin {m} outside |m| <= {self.m_max}")
        return complex(self.coefficients[m + self.m_max])


def generalized_period(e, gamma: Curve, nu: float, N: int | None = None) -> PeriodResult:
    """Trapezoid value of the loop integral at a single grid frequency nu."""
    start = time.perf_counter()
    _check_same_surface(e, gamma)
    L = gamma.period
    m = _grid_index(nu, L)
    nu_exact = _TWO_PI * m / L
    N = _auto_samples(e.frequency, nu_exact, L) if N is None else _check_samples(N)
    s, vals = _sample_values(e, gamma, N)
    phases = np.exp(-1j * nu_exact * s)
    weighted = vals * phases
    coeff = (L / N) * weighted.sum()
    half = (L / (N // 2)) * weighted[::2].sum()
    return PeriodResult(
        nu=nu_exact,
        lam=e.frequency,
        coeff=complex(coeff),
        N=N,
        err_est=float(abs(coeff - half)),
        runtime=time.perf_counter() - start,
    )


def period_spectrum(e, gamma: Curve, m_max: int, N: int | None = None) -> PeriodSpectrum:
    """Coefficients for every |m| <= m_max via one FFT of the curve samples."""
    _check_same_surface(e, gamma)
    if m_max != int(m_max) or m_max < 0:
        raise ValueError("m_max must be a nonnegative integer")
    m_max = int(m_max)
    L = gamma.period
    if N is None:
        N = _auto_samples(e.frequency, _TWO_PI * m_max / L, L)
    else:
        N = _check_samples(N)
    if m_max > N // 4:
        raise RangeError(f"m_max = {m_max} above N/4 = {N // 4}")
    _, vals = _sample_values(e, gamma, N)
    F = np.fft.fft(vals) * (L / N)
    coeffs = np.concatenate([F[N - m_max :], F[: m_max + 1]]) if m_max else F[:1]
    return PeriodSpectrum(
        lam=e.frequency, L=L, m_max=m_max, coefficients=coeffs, N=N
    )
