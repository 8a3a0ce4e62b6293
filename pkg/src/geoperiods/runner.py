"""Experiment execution: the five subcommand operations and result caching.

Each operation takes a validated config dict and returns a ResultBundle of
CSV payload texts, metadata, a standalone plot script, and rendered
figures.  Payload bytes are deterministic for a given config: seeds are
explicit, reduction order is fixed, and floats are emitted via repr.
Completed bundles are cached under their config hash; cache writes go to a
temp directory renamed into place, so readers never observe partial state.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import __version__, plotting
from .admissibility import admissible_eps
from .config import SCHEMA_VERSION, config_hash, validate_config
from .curve import curve_from_config
from .eigenfun import (
    SphereHighestWeight,
    SphereZonal,
    TorusWave,
    random_wave_sum,
)
from .errors import ConfigError
from .jacobi import circle_curvature, limiting_circle_curvature
from .periods import generalized_period
from .phase import PhaseGrid, _LiftedPair, stationarity_check
from .surface import FlatTorus, deck_from_config, surface_from_config

_BUNDLE_FILE = "bundle.json"


@dataclass
class ResultBundle:
    """Everything one experiment produced, ready to be written or cached."""

    subcommand: str
    config_hash: str
    csvs: dict[str, str]
    metadata: dict
    plot_script: str
    figures: dict[str, bytes] = field(default_factory=dict)

    def write(self, out_dir) -> None:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in self.csvs.items():
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                fh.write(text)
        with open(os.path.join(out_dir, "plot.py"), "w") as fh:
            fh.write(self.plot_script)
        for name, blob in self.figures.items():
            with open(os.path.join(out_dir, name), "wb") as fh:
                fh.write(blob)
        with open(os.path.join(out_dir, "metadata.json"), "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return repr(int(x))
    return repr(float(x))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _base_metadata(cfg: dict, runtime: float) -> dict:
    return {
        "config_hash": config_hash(cfg),
        "subcommand": cfg["subcommand"],
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.get("seed"),
        "runtime_s": runtime,
        "versions": {
            "geoperiods": __version__,
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
    }


def _snap_nu(eps: float, lam: float, length: float) -> float:
    """Nearest exact frequency-grid multiple of 2 pi / length to eps * lam."""
    w = 2.0 * math.pi / length
    return w * round(eps * lam / w)


def _fit_slope(lams, mags) -> float:
    logs = np.log(np.maximum(np.asarray(mags, dtype=float), 1e-300))
    return float(np.polyfit(np.log(np.asarray(lams, dtype=float)), logs, 1)[0])


# ---------------------------------------------------------------------------
# subcommand operations


def run_limiting_curvature(cfg: dict, jobs: int = 1) -> ResultBundle:
    """Tabulate both limiting-circle curvatures along the configured curve."""
    start = time.perf_counter()
    S = surface_from_config(cfg["surface"])
    gamma = curve_from_config(S, cfg["curve"])
    n_t = cfg.get("n_t", 256)
    ts = gamma.period * np.arange(n_t) / n_t

    def sample(t):
        w = S.rotate90(gamma.tangent(t))
        plus = S.unit_vector(w.base, w.v1, w.v2)
        minus = S.unit_vector(w.base, -w.v1, -w.v2)
        return (
            limiting_circle_curvature(S, plus.base, plus),
            limiting_circle_curvature(S, minus.base, minus),
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(sample, ts))
    else:
        pairs = [sample(t) for t in ts]
    rows = [(t, kp, km) for t, (kp, km) in zip(ts, pairs)]
    csvs = {"limiting.csv": _csv_text(["t", "k_plus", "k_minus"], rows)}
    meta = _base_metadata(cfg, time.perf_counter() - start)
    meta["k_plus_range"] = [min(p[0] for p in pairs), max(p[0] for p in pairs)]
    meta["k_minus_range"] = [min(p[1] for p in pairs), max(p[1] for p in pairs)]
    return ResultBundle(
        cfg["subcommand"], config_hash(cfg), csvs, meta,
        plotting.plot_script(cfg["subcommand"]),
    )


def run_admissibility(cfg: dict, jobs: int = 1) -> ResultBundle:
    """Compute the admissible-ratio report and emit its two CSVs."""
    start = time.perf_counter()
    S = surface_from_config(cfg["surface"])
    gamma = curve_from_config(S, cfg["curve"])
    report = admissible_eps(
        gamma, n_t=cfg.get("n_t", 512), n_eps=cfg.get("n_eps", 1001), jobs=jobs
    )
    csvs = {
        "samples.csv": report.samples_csv_text(),
        "margin.csv": report.margin_csv_text(),
    }
    meta = _base_metadata(cfg, time.perf_counter() - start)
    meta["intervals"] = [list(iv) for iv in report.E]
    meta["margin_at_zero"] = report.margin(0.0)
    return ResultBundle(
        cfg["subcommand"], config_hash(cfg), csvs, meta,
        plotting.plot_script(cfg["subcommand"]),
    )


def _family_builder(S, params: dict):
    """Per-lambda eigenfunction factory for scan subcommands.

    The grid entries are frequencies for torus waves and wave sums, and
    integer degrees for the sphere families.
    """
    family = params["family"]
    if family == "torus_wave":
        if not isinstance(S, FlatTorus):
            raise ConfigError("torus_wave needs a flat_torus surface", "/surface")
        d1, d2 = params.get("direction", [1, 0])
        if d1 == 0 and d2 == 0:
            raise ConfigError("direction cannot vanish", "/eigenfunction/direction")
        unit = math.hypot(2.0 * math.pi * d1 / S.L1, 2.0 * math.pi * d2 / S.L2)

        def build(x):
            scale = max(1, round(x / unit))
            return TorusWave(S, (scale * d1, scale * d2))

    elif family == "sphere_zonal":

        def build(x):
            return SphereZonal(S, int(round(x)))

    elif family == "sphere_highest_weight":

        def build(x):
            return SphereHighestWeight(S, int(round(x)))

    elif family == "hyperbolic_wave_sum":
        seed = params.get("seed", 0)
        n_terms = params.get("n_terms", 12)

        def build(x):
            return random_wave_sum(S, x, n_terms=n_terms, seed=seed)

    else:  # pragma: no cover - schema rejects other names
        raise ConfigError(f"unknown family {family!r}", "/eigenfunction/family")
    return build


def _scan_rows(cfg, S, gamma, jobs):
    """Period rows (and their group keys) for the scan subcommands."""
    build = _family_builder(S, cfg["eigenfunction"])
    n_override = cfg.get("quadrature", {}).get("n_samples")
    surface_tag = cfg["surface"]["type"]
    curve_tag = cfg["curve"]["type"]
    family = cfg["eigenfunction"]["family"]
    eps_grid = cfg.get("eps_grid")
    nu_grid = cfg.get("nu_grid")

    tasks = []
    for lam_raw in cfg["lambdas"]:
        e = build(lam_raw)
        lam = e.frequency
        if nu_grid is not None:
            for nu in nu_grid:
                tasks.append((e, lam, _snap_nu(1.0, nu, gamma.period), nu / lam))
        else:
            for eps in eps_grid:
                tasks.append((e, lam, _snap_nu(eps, lam, gamma.period), eps))

    def solve(task):
        e, lam, nu, eps = task
        res = generalized_period(e, gamma, nu, N=n_override)
        return (
            surface_tag, curve_tag, family, lam, res.nu, eps,
            res.coeff.real, res.coeff.imag, abs(res.coeff), res.N, res.err_est,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(solve, tasks))
    else:
        rows = [solve(task) for task in tasks]
    return rows


_PERIOD_HEADER = [
    "surface", "curve", "family", "lambda", "nu", "eps",
    "re", "im", "abs", "N", "err_est",
]


def run_periods_scan(cfg: dict, jobs: int = 1) -> ResultBundle:
    """Sweep the frequency grid, emitting periods and per-ratio slopes."""
    start = time.perf_counter()
    S = surface_from_config(cfg["surface"])
    gamma = curve_from_config(S, cfg["curve"])
    rows = _scan_rows(cfg, S, gamma, jobs)

    slopes = []
    for eps in sorted(set(r[5] for r in rows)):
        group = [r for r in rows if r[5] == eps]
        if len(group) >= 2:
            slopes.append((eps, _fit_slope([r[3] for r in group],
                                           [r[8] for r in group]), len(group)))
    csvs = {
        "periods.csv": _csv_text(_PERIOD_HEADER, rows),
        "slopes.csv": _csv_text(["eps", "slope", "n_points"], slopes),
    }
    meta = _base_metadata(cfg, time.perf_counter() - start)
    meta["slopes"] = {repr(e): s for e, s, _ in slopes}
    meta["max_err_est"] = max((r[10] for r in rows), default=0.0)
    return ResultBundle(
        cfg["subcommand"], config_hash(cfg), csvs, meta,
        plotting.plot_script(cfg["subcommand"]),
    )


def run_decay_scan(cfg: dict, jobs: int = 1) -> ResultBundle:
    """Seed-fixed hyperbolic wave sums over the curve: periods plus trend."""
    start = time.perf_counter()
    S = surface_from_config(cfg["surface"])
    if cfg["surface"]["type"] != "hyperbolic":
        raise ConfigError("decay-scan runs on the hyperbolic plane", "/surface/type")
    if cfg["eigenfunction"]["family"] != "hyperbolic_wave_sum":
        raise ConfigError(
            "decay-scan uses hyperbolic_wave_sum", "/eigenfunction/family"
        )
    gamma = curve_from_config(S, cfg["curve"])
    rows = _scan_rows(cfg, S, gamma, jobs)

    trend, ratios = [], []
    for eps in sorted(set(r[5] for r in rows)):
        group = sorted((r for r in rows if r[5] == eps), key=lambda r: r[3])
        mags = [r[8] for r in group]
        if len(group) >= 2:
            rho = float(stats.spearmanr([r[3] for r in group], mags).statistic)
        else:
            rho = 0.0
        trend.append((eps, rho, len(group)))
        base = mags[0] if mags[0] > 0.0 else 1.0
        ratios.extend((eps, r[3], m / base) for r, m in zip(group, mags))
    csvs = {
        "periods.csv": _csv_text(_PERIOD_HEADER, rows),
        "trend.csv": _csv_text(["eps", "spearman_rho", "n_points"], trend),
        "ratios.csv": _csv_text(["eps", "lambda", "ratio"], ratios),
    }
    meta = _base_metadata(cfg, time.perf_counter() - start)
    meta["trend"] = {repr(e): rho for e, rho, _ in trend}
    return ResultBundle(
        cfg["subcommand"], config_hash(cfg), csvs, meta,
        plotting.plot_script(cfg["subcommand"]),
    )


def run_phase_check(cfg: dict, jobs: int = 1) -> ResultBundle:
    """Build a PhaseGrid and summarize the derivative-bound checks.

    Three checks are reported: the mixed-derivative bound 2/r, the
    connecting-circle curvature sandwich 0 < kappa(r) - k_limit < 1/r at a
    node subsample, and the stationary-slice nondegeneracy report.  A
    failed curvature-margin hypothesis is recorded, not raised.
    """
    start = time.perf_counter()
    S = surface_from_config(cfg["surface"])
    gamma = curve_from_config(S, cfg["curve"])
    alpha = deck_from_config(cfg["transform"])
    ph = cfg["phase"]
    eps = ph["eps"]
    nt, ns = ph.get("grid", [16, 16])
    grid = PhaseGrid(gamma, alpha, eps, nt, ns, jobs=jobs)

    checks = []
    mixed_excess = float(np.max(np.abs(grid.hess[1]) - 2.0 / grid.r))
    checks.append(("mixed_bound", mixed_excess <= 1e-4, mixed_excess, 1e-4))

    pair = _LiftedPair(gamma, alpha)
    gaps = []
    for t in grid.t_grid[:: max(1, nt // 8)]:
        for s in grid.s_grid[:: max(1, ns // 8)]:
            r, vp, _ = pair.connection(t, s)
            kappa = circle_curvature(S, pair.lift(t), vp, r)
            klim = limiting_circle_curvature(S, pair.lift(t), vp)
            gaps.append((kappa - klim, kappa - klim - 1.0 / r))
    low = min(g[0] for g in gaps)
    high = max(g[1] for g in gaps)
    # strict in exact arithmetic; 1e-10 slack admits the boundary cases
    # (flat surfaces and gaps below double resolution)
    checks.append(("sandwich_lower", low > -1e-10, low, 0.0))
    checks.append(("sandwich_upper", high < 1e-10, high, 0.0))

    interval = ph.get("interval", [0.0, gamma.period])
    rep = stationarity_check(
        gamma, alpha, eps, interval,
        ph.get("eps0", 0.25), ph.get("delta", 0.25), n_grid=ph.get("n_grid", 16),
    )
    checks.append(("hypothesis_margin", rep.hypothesis_met, rep.margin_min, rep.eps0))
    checks.append(
        ("stationarity", rep.implication_holds, rep.min_abs_d2phi_ss, rep.threshold)
    )

    rows = [(name, repr(bool(ok)), obs, bound) for name, ok, obs, bound in checks]
    csvs = {
        "grid.csv": grid.csv_text(),
        "checks.csv": _csv_text(["check", "passed", "observed", "bound"], rows),
    }
    meta = _base_metadata(cfg, time.perf_counter() - start)
    meta["hypothesis_met"] = rep.hypothesis_met
    meta["implication_holds"] = rep.implication_holds
    meta["antecedent"] = rep.antecedent
    meta["checks"] = {name: bool(ok) for name, ok, _, _ in checks}
    return ResultBundle(
        cfg["subcommand"], config_hash(cfg), csvs, meta,
        plotting.plot_script(cfg["subcommand"]),
    )


_OPERATIONS = {
    "limiting-curvature": run_limiting_curvature,
    "admissibility": run_admissibility,
    "periods-scan": run_periods_scan,
    "phase-check": run_phase_check,
    "decay-scan": run_decay_scan,
}


# ---------------------------------------------------------------------------
# cache


def _cache_root(cache_dir):
    env = os.environ.get("GEOPERIODS_CACHE")
    return env if env else cache_dir


def _cache_load(path) -> ResultBundle | None:
    manifest = os.path.join(path, _BUNDLE_FILE)
    if not os.path.isfile(manifest):
        return None
    with open(manifest) as fh:
        head = json.load(fh)
    csvs = {}
    for name in head["csvs"]:
        with open(os.path.join(path, name), newline="") as fh:
            csvs[name] = fh.read()
    figures = {}
    for name in head["figures"]:
        with open(os.path.join(path, name), "rb") as fh:
            figures[name] = fh.read()
    with open(os.path.join(path, "plot.py")) as fh:
        script = fh.read()
    return ResultBundle(
        head["subcommand"], head["config_hash"], csvs, head["metadata"],
        script, figures,
    )


def _cache_store(path, bundle: ResultBundle) -> None:
    parent = os.path.dirname(path) or "."
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".tmp-bundle-", dir=parent)
    try:
        for name, text in bundle.csvs.items():
            with open(os.path.join(tmp, name), "w", newline="") as fh:
                fh.write(text)
        for name, blob in bundle.figures.items():
            with open(os.path.join(tmp, name), "wb") as fh:
                fh.write(blob)
        with open(os.path.join(tmp, "plot.py"), "w") as fh:
            fh.write(bundle.plot_script)
        head = {
            "subcommand": bundle.subcommand,
            "config_hash": bundle.config_hash,
            "metadata": bundle.metadata,
            "csvs": sorted(bundle.csvs),
            "figures": sorted(bundle.figures),
        }
        with open(os.path.join(tmp, _BUNDLE_FILE), "w") as fh:
            json.dump(head, fh, indent=2, sort_keys=True)
        try:
            os.rename(tmp, path)
        except OSError:
            shutil.rmtree(tmp, ignore_errors=True)  # concurrent writer won
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def run_experiment(
    cfg: dict, jobs: int = 1, cache_dir=None, render: bool = True
) -> ResultBundle:
    """Validate, run (or fetch from cache), render figures, return bundle."""
    validate_config(cfg)
    key = f"{cfg['subcommand']}-{config_hash(cfg)}"
    root = _cache_root(cache_dir)
    if root:
        cached = _cache_load(os.path.join(root, key))
        if cached is not None:
            return cached
    bundle = _OPERATIONS[cfg["subcommand"]](cfg, jobs=jobs)
    if render:
        bundle.figures = plotting.render(cfg["subcommand"], bundle.csvs)
    if root:
        _cache_store(os.path.join(root, key), bundle)
    return bundle
