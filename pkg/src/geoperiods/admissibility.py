"""Admissible frequency ratios for closed curves on nonpositively curved surfaces.

For a unit-speed closed curve gamma, a frequency ratio eps in (-1, 1) is
admissible when the curve's normal acceleration stays away from the
limiting-circle curvatures scaled by sqrt(1 - eps^2):

    h(t) != -sqrt(1 - eps^2) * k_plus(t)    and
    h(t) != +sqrt(1 - eps^2) * k_minus(t)   for every t,

where h = <D/dt gamma', gamma'perp> is the signed normal curvature,
gamma'perp is the tangent rotated by +90 degrees, and k_plus / k_minus are
the limiting-circle curvatures toward +gamma'perp / -gamma'perp.  The margin
of a ratio is the smaller of the two absolute differences, minimized over t;
a ratio is admissible exactly when its margin is positive.

The admissible set is reported as maximal open intervals of an eps grid, so
interval endpoints are located only to the grid resolution; the margin
itself is evaluated exactly (in eps) from the parameter samples.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .curve import Curve, signed_normal_curvature
from .errors import RangeError, UnsupportedSurfaceError
from .jacobi import limiting_circle_curvature

_K_TOL = 1e-6  # limiting-curvature tolerance; margins of interest are O(0.1)


def _margins(h, k_plus, k_minus, s):
    # min over samples of min(|h + s k+|, |h - s k-|), one value per entry of s
    a = np.abs(h[None, :] + s[:, None] * k_plus[None, :])
    b = np.abs(h[None, :] - s[:, None] * k_minus[None, :])
    return np.minimum(a, b).min(axis=1)


def _open_intervals(eps, margin):
    """Maximal runs of positive margin, widened by one grid step per side.

    Widening makes the positive grid points interior to the reported open
    intervals while every nonpositive grid point stays outside them, so the
    report is exact on the grid and fuzzy only within one step.
    """
    out = []
    n = eps.size
    i = 0
    while i < n:
        if margin[i] > 0.0:
            j = i
            while j + 1 < n and margin[j + 1] > 0.0:
                j += 1
            lo = -1.0 if i == 0 else float(eps[i - 1])
            hi = 1.0 if j == n - 1 else float(eps[j + 1])
            out.append((lo, hi))
            i = j + 1
        else:
            i += 1
    return out


@dataclass
class AdmissibilityReport:
    """Curvature samples of a closed curve and the margins of each ratio.

    ``E`` lists the maximal open eps-intervals with positive margin, sorted
    and pairwise disjoint inside (-1, 1).
    """

    t_grid: np.ndarray
    h: np.ndarray
    k_plus: np.ndarray
    k_minus: np.ndarray
    eps_grid: np.ndarray
    margin_grid: np.ndarray
    E: list[tuple[float, float]]

    @property
    def resolution(self) -> float:
        """Spacing of the eps grid; interval endpoints are this coarse."""
        return float(self.eps_grid[1] - self.eps_grid[0])

    def margin(self, eps: float) -> float:
        """Margin of a single ratio, minimized over the stored t samples."""
        if not abs(eps) < 1.0:
            raise RangeError("frequency ratio must satisfy |eps| < 1")
        s = np.array([np.sqrt(1.0 - eps * eps)])
        return float(_margins(self.h, self.k_plus, self.k_minus, s)[0])

    def samples_csv_text(self) -> str:
        """Parameter samples as CSV text with columns t, h, k_plus, k_minus."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "h", "k_plus", "k_minus"])
        for row in zip(self.t_grid, self.h, self.k_plus, self.k_minus):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def margin_csv_text(self) -> str:
        """Margin curve as CSV text with columns eps, margin."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["eps", "margin"])
        for e, m in zip(self.eps_grid, self.margin_grid):
            writer.writerow([repr(float(e)), repr(float(m))])
        return buf.getvalue()

    def write_samples_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.samples_csv_text())

    def write_margin_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.margin_csv_text())


def report_from_samples(t, h, k_plus, k_minus, n_eps: int = 1001) -> AdmissibilityReport:
    """Build a report from precomputed curvature samples.

    Useful when h and k_plus/k_minus come from a source other than the
    built-in surfaces, such as tabulated data for a closed geodesic on a
    quotient surface (h = 0, k = constant).
    """
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    k_plus = np.asarray(k_plus, dtype=float)
    k_minus = np.asarray(k_minus, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t must be a nonempty 1-d array")
    if not (t.shape == h.shape == k_plus.shape == k_minus.shape):
        raise ValueError("t, h, k_plus, k_minus must have equal lengths")
    stacked = np.concatenate([h, k_plus, k_minus])
    if not np.all(np.isfinite(stacked)):
        raise ValueError("curvature samples must be finite")
    if np.any(k_plus < 0.0) or np.any(k_minus < 0.0):
        raise ValueError("limiting-circle curvatures must be nonnegative")
    if n_eps < 3:
        raise ValueError("n_eps must be at least 3")
    eps = np.linspace(-1.0, 1.0, n_eps)
    s = np.sqrt(np.clip(1.0 - eps * eps, 0.0, None))
    margin = _margins(h, k_plus, k_minus, s)
    return AdmissibilityReport(
        t, h, k_plus, k_minus, eps, margin, _open_intervals(eps, margin)
    )


def admissible_eps(
    gamma: Curve, n_t: int = 512, n_eps: int = 1001, jobs: int = 1
) -> AdmissibilityReport:
    """Sample h and k_plus/k_minus along the curve and report the margins.

    The limiting-circle curvatures are resolved to 1e-6, well below the
    margins the downstream checks care about.  The parameter sweep is an
    order-independent map, so ``jobs`` may fan it out over threads.
    """
    S = gamma.surface
    if S.is_comparison_only:
        raise UnsupportedSurfaceError(
            "admissible ratios need nonpositive curvature; "
            f"{type(S).__name__} is a comparison-only surface"
        )
    if n_t < 2:
        raise ValueError("n_t must be at least 2")
    ts = gamma.period * np.arange(n_t) / n_t

    def sample(t):
        w = S.rotate90(gamma.tangent(t))
        # renormalize: sampled curves are unit speed only to ~1e-6
        wp = S.unit_vector(w.base, w.v1, w.v2)
        wm = S.unit_vector(w.base, -w.v1, -w.v2)
        return (
            signed_normal_curvature(gamma, t),
            limiting_circle_curvature(S, wp.base, wp, tol=_K_TOL),
            limiting_circle_curvature(S, wm.base, wm, tol=_K_TOL),
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sample, ts))
    else:
        rows = [sample(t) for t in ts]
    h, k_plus, k_minus = (np.array(col) for col in zip(*rows))
    return report_from_samples(ts, h, k_plus, k_minus, n_eps=n_eps)


def margin_at(report: AdmissibilityReport, eps: float) -> float:
    """Margin of a single ratio eps in (-1, 1); zero iff eps is excluded."""
    return report.margin(eps)
