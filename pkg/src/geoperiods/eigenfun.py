"""Exact Laplace eigenfunction families on the model surfaces.

Four closed-form families, one per geometry:

* ``TorusWave``: plane waves exp(i<k, x>) on a flat torus, k in the dual
  lattice (2 pi m1 / L1, 2 pi m2 / L2).
* ``SphereZonal``: zonal spherical harmonics sqrt((2n+1)/4pi) P_n(cos theta),
  rotation-invariant about the polar axis.
* ``SphereHighestWeight``: N_n sin^n(theta) e^{i n phi}, the L2-normalized
  harmonics concentrating on the equator.
* ``HyperbolicWaveSum``: finite sums of upper-half-plane Poisson kernel
  powers P(z, b)^{1/2 + i lam}, exact eigenfunctions on the non-compact
  plane.  They carry no L2 normalization, so decay studies compare ratios
  across lam at a fixed construction rather than absolute sizes.

Every family exposes ``frequency`` (the square root of the eigenvalue,
except for the hyperbolic family where the spectral parameter lam is used
and differs from sqrt(eigenvalue) by O(1/lam)), ``eigenvalue``, scalar and
batch evaluators, and a config round trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import RangeError, UnsupportedSurfaceError
from .surface import (
    FlatTorus,
    HyperbolicPlane,
    RoundSphere,
    Surface,
    SurfacePoint,
)

_LEGENDRE_CAP = 4096  # upward recurrence stays well-conditioned on [-1, 1]


def _require(surface: Surface, cls, family: str) -> None:
    if not isinstance(surface, cls):
        raise UnsupportedSurfaceError(
            f"{family} lives on {cls.__name__}, not {type(surface).__name__}"
        )


def _legendre(n: int, x: np.ndarray) -> np.ndarray:
    """P_n(x) by the upward three-term recurrence."""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev
    p = x.copy()
    for j in range(1, n):
        p, p_prev = ((2 * j + 1) * x * p - j * p_prev) / (j + 1), p
    return p


class _Eigenfunction:
    """Shared scalar entry point; subclasses implement ``_values``."""

    surface: Surface

    def evaluate(self, p: SurfacePoint) -> complex:
        self.surface.check_point(p)
        return complex(self._values(np.array([[p.x1, p.x2]]))[0])

    def evaluate_batch(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError("coords must be an (n, 2) array")
        return self._values(coords)

    def _values(self, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class TorusWave(_Eigenfunction):
    """exp(i <k, x>) with k = (2 pi mode1 / L1, 2 pi mode2 / L2)."""

    surface: FlatTorus
    mode: tuple[int, int]

    def __post_init__(self):
        _require(self.surface, FlatTorus, "TorusWave")
        m1, m2 = self.mode
        if m1 != int(m1) or m2 != int(m2):
            raise ValueError("torus wave mode numbers must be integers")
        object.__setattr__(self, "mode", (int(m1), int(m2)))

    @property
    def wave_vector(self) -> tuple[float, float]:
        return (
            2.0 * math.pi * self.mode[0] / self.surface.L1,
            2.0 * math.pi * self.mode[1] / self.surface.L2,
        )

    @property
    def frequency(self) -> float:
        return math.hypot(*self.wave_vector)

    @property
    def eigenvalue(self) -> float:
        return self.frequency**2

    def _values(self, coords):
        k1, k2 = self.wave_vector
        return np.exp(1j * (k1 * coords[:, 0] + k2 * coords[:, 1]))

    def to_config(self) -> dict:
        return {"family": "torus_wave", "mode": list(self.mode)}


@dataclass(frozen=True)
class SphereZonal(_Eigenfunction):
    """sqrt((2n+1)/4pi) P_n(cos theta), constant on circles of latitude."""

    surface: RoundSphere
    degree: int

    def __post_init__(self):
        _require(self.surface, RoundSphere, "SphereZonal")
        if self.degree != int(self.degree) or self.degree < 0:
            raise ValueError("degree must be a nonnegative integer")
        if self.degree > _LEGENDRE_CAP:
            raise RangeError(f"degree {self.degree} above recurrence cap {_LEGENDRE_CAP}")
        object.__setattr__(self, "degree", int(self.degree))

    @property
    def frequency(self) -> float:
        n = self.degree
        return math.sqrt(n * (n + 1)) / self.surface.R

    @property
    def eigenvalue(self) -> float:
        n = self.degree
        return n * (n + 1) / self.surface.R**2

    def _values(self, coords):
        x = np.cos(coords[:, 1])
        norm = math.sqrt((2 * self.degree + 1) / (4.0 * math.pi))
        return (norm * _legendre(self.degree, x)).astype(complex)

    def to_config(self) -> dict:
        return {"family": "sphere_zonal", "degree": self.degree}


@dataclass(frozen=True)
class SphereHighestWeight(_Eigenfunction):
    """N_n sin^n(theta) e^{i n phi}, mass concentrated near the equator.

    N_n normalizes the surface integral of |.|^2 to 1; it is computed from
    log Gamma values so large degrees neither overflow nor lose digits.
    """

    surface: RoundSphere
    degree: int

    def __post_init__(self):
        _require(self.surface, RoundSphere, "SphereHighestWeight")
        if self.degree != int(self.degree) or self.degree < 1:
            raise ValueError("degree must be a positive integer")
        object.__setattr__(self, "degree", int(self.degree))

    @property
    def normalization(self) -> float:
        # integral of sin^(2n+1) over [0, pi] is 2^(2n+1) (n!)^2 / (2n+1)!
        n = self.degree
        log_integral = (
            math.log(2.0 * math.pi)
            + 2.0 * math.log(self.surface.R)
            + (2 * n + 1) * math.log(2.0)
            + 2.0 * gammaln(n + 1)
            - gammaln(2 * n + 2)
        )
        return math.exp(-0.5 * log_integral)

    @property
    def frequency(self) -> float:
        n = self.degree
        return math.sqrt(n * (n + 1)) / self.surface.R

    @property
    def eigenvalue(self) -> float:
        n = self.degree
        return n * (n + 1) / self.surface.R**2

    def _values(self, coords):
        n = self.degree
        return (
            self.normalization
            * np.sin(coords[:, 1]) ** n
            * np.exp(1j * n * coords[:, 0])
        )

    def to_config(self) -> dict:
        return {"family": "sphere_highest_weight", "degree": self.degree}


@dataclass(frozen=True)
class HyperbolicWaveSum(_Eigenfunction):
    """Sum of Poisson kernel powers amp_j P(z, b_j)^{1/2 + i lam}.

    P(z, b) = y / ((x - b)^2 + y^2) for a boundary point b on the real
    axis; b = inf contributes y^{1/2 + i lam}.  Each power is an exact
    eigenfunction with eigenvalue a^2 (1/4 + lam^2); the reported frequency
    is the scaled spectral parameter a lam, which differs from
    sqrt(eigenvalue) by O(1/lam).
    """

    surface: HyperbolicPlane
    terms: tuple[tuple[float, complex], ...]
    lam: float

    def __post_init__(self):
        _require(self.surface, HyperbolicPlane, "HyperbolicWaveSum")
        if not self.lam > 0.0:
            raise ValueError("spectral parameter lam must be positive")
        terms = tuple((float(b), complex(amp)) for b, amp in self.terms)
        if not 1 <= len(terms) <= 64:
            raise ValueError("wave sums take between 1 and 64 terms")
        for b, amp in terms:
            if math.isnan(b):
                raise ValueError("boundary points must be real or inf")
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "terms", terms)

    @property
    def frequency(self) -> float:
        return self.surface.a * self.lam

    @property
    def eigenvalue(self) -> float:
        return self.surface.a**2 * (0.25 + self.lam**2)

    def _values(self, coords):
        x, y = coords[:, 0], coords[:, 1]
        s = 0.5 + 1j * self.lam
        out = np.zeros(len(coords), dtype=complex)
        for b, amp in self.terms:
            kernel = y if math.isinf(b) else y / ((x - b) ** 2 + y**2)
            out += amp * np.exp(s * np.log(kernel))
        return out

    def to_config(self) -> dict:
        return {
            "family": "hyperbolic_wave_sum",
            "lam": self.lam,
            "terms": [
                {"b": "inf" if math.isinf(b) else b, "re": a.real, "im": a.imag}
                for b, a in self.terms
            ],
        }


def random_wave_sum(
    surface: HyperbolicPlane, lam: float, n_terms: int = 12, seed: int = 0
) -> HyperbolicWaveSum:
    """Seeded wave sum: boundary points uniform in (-3, 3), unit-modulus
    amplitudes with uniform phases.  The draw order is part of the contract
    so a (seed, n_terms) pair always names the same eigenfunction.
    """
    rng = np.random.default_rng(seed)
    bs = rng.uniform(-3.0, 3.0, n_terms)
    amps = np.exp(2j * math.pi * rng.uniform(0.0, 1.0, n_terms))
    return HyperbolicWaveSum(
        surface, tuple((float(b), complex(a)) for b, a in zip(bs, amps)), lam
    )


def evaluate(e: _Eigenfunction, p: SurfacePoint) -> complex:
    """Value of the eigenfunction at a chart point."""
    return e.evaluate(p)


def laplacian_residual(e: _Eigenfunction, p: SurfacePoint, h: float) -> float:
    """|Delta_g e(p) + eigenvalue * e(p)| with a 5-point metric-aware stencil.

    The second-order stencil leaves an O(h^2) truncation residual, so the
    value shrinks by about 4x when h halves; it certifies the closed forms
    against the surface's own Laplacian coefficients.
    """
    if not 1e-5 <= h <= 1e-2:
        raise RangeError("step h must lie in [1e-5, 1e-2]")
    S = e.surface
    a11, a22, b1, b2 = S.laplacian_coeffs(p)
    f0 = e.evaluate(p)
    fe = e.evaluate(S.point(p.x1 + h, p.x2))
    fw = e.evaluate(S.point(p.x1 - h, p.x2))
    fn = e.evaluate(S.point(p.x1, p.x2 + h))
    fs = e.evaluate(S.point(p.x1, p.x2 - h))
    lap = (
        (a11 * (fe - 2.0 * f0 + fw) + a22 * (fn - 2.0 * f0 + fs)) / h**2
        + (b1 * (fe - fw) + b2 * (fn - fs)) / (2.0 * h)
    )
    return abs(lap + e.eigenvalue * f0)


def eigenfunction_from_config(S: Surface, cfg: dict) -> _Eigenfunction:
    """Rebuild a family from its config form (see each ``to_config``).

    Hyperbolic wave sums accept either explicit ``terms`` or the seeded
    shorthand {"lam": ..., "seed": ..., "n_terms": ...}.
    """
    family = cfg.get("family")
    if family == "torus_wave":
        m1, m2 = cfg["mode"]
        return TorusWave(S, (m1, m2))
    if family == "sphere_zonal":
        return SphereZonal(S, cfg["degree"])
    if family == "sphere_highest_weight":
        return SphereHighestWeight(S, cfg["degree"])
    if family == "hyperbolic_wave_sum":
        if "seed" in cfg:
            return random_wave_sum(
                S, cfg["lam"], n_terms=cfg.get("n_terms", 12), seed=cfg["seed"]
            )
        terms = tuple(
            (
                math.inf if t["b"] == "inf" else float(t["b"]),
                complex(t["re"], t.get("im", 0.0)),
            )
            for t in cfg["terms"]
        )
        return HyperbolicWaveSum(S, terms, cfg["lam"])
    raise ValueError(f"unknown eigenfunction family {family!r}")
