"""Figure rendering for experiment bundles.

Each subcommand gets one PNG summarizing its CSV payloads, rendered with
the Agg backend, plus a standalone script with the same plotting logic so
the figures can be regenerated (or restyled) from the CSVs alone without
this package installed.
"""

from __future__ import annotations

import csv
import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402


def _columns(text: str) -> dict[str, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    out = {}
    for k, name in enumerate(header):
        try:
            out[name] = np.array([float(row[k]) for row in body])
        except ValueError:
            out[name] = np.array([row[k] for row in body])
    return out


def render_limiting(csvs: dict[str, str]) -> bytes:
    cols = _columns(csvs["limiting.csv"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(cols["t"], cols["k_plus"], label="k toward +normal")
    ax.plot(cols["t"], cols["k_minus"], label="k toward -normal", ls="--")
    ax.set_xlabel("curve parameter t")
    ax.set_ylabel("limiting-circle curvature")
    ax.legend()
    return _png(fig)


def render_admissibility(csvs: dict[str, str]) -> bytes:
    samples = _columns(csvs["samples.csv"])
    margin = _columns(csvs["margin.csv"])
    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
    a.plot(samples["t"], samples["h"], label="signed curvature h")
    a.plot(samples["t"], samples["k_plus"], label="k+", ls="--")
    a.plot(samples["t"], -samples["k_minus"], label="-k-", ls=":")
    a.set_xlabel("t")
    a.legend()
    b.plot(margin["eps"], margin["margin"])
    b.axhline(0.0, color="k", lw=0.5)
    b.set_xlabel("frequency ratio eps")
    b.set_ylabel("margin")
    fig.tight_layout()
    return _png(fig)


def render_periods(csvs: dict[str, str]) -> bytes:
    cols = _columns(csvs["periods.csv"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for e in sorted(set(cols["eps"])):
        sel = cols["eps"] == e
        mag = np.maximum(cols["abs"][sel], 1e-300)
        ax.loglog(cols["lambda"][sel], mag, marker="o", label=f"eps={e:g}")
    ax.set_xlabel("frequency lambda")
    ax.set_ylabel("|period|")
    ax.legend(fontsize=8)
    return _png(fig)


def render_phase(csvs: dict[str, str]) -> bytes:
    cols = _columns(csvs["grid.csv"])
    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
    a.plot(cols["r"], np.abs(cols["d2phi_ts"]), ".", ms=3, label="|mixed|")
    rr = np.linspace(cols["r"].min(), cols["r"].max(), 64)
    a.plot(rr, 2.0 / rr, "k--", label="2/r")
    a.set_xlabel("separation r")
    a.legend()
    diff = np.abs(cols["d2phi_ss"] - cols["fd_ss"])
    b.hist(np.log10(np.maximum(diff, 1e-18)), bins=24)
    b.set_xlabel("log10 |formula - differences| (ss entry)")
    fig.tight_layout()
    return _png(fig)


def _png(fig) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=120)
    plt.close(fig)
    return buf.getvalue()


def render(subcommand: str, csvs: dict[str, str]) -> dict[str, bytes]:
    """PNG payloads for one bundle, keyed by filename."""
    if subcommand == "limiting-curvature":
        return {"limiting.png": render_limiting(csvs)}
    if subcommand == "admissibility":
        return {"admissibility.png": render_admissibility(csvs)}
    if subcommand == "periods-scan":
        return {"periods.png": render_periods(csvs)}
    if subcommand == "phase-check":
        return {"phase.png": render_phase(csvs)}
    if subcommand == "decay-scan":
        return {"decay.png": render_periods(csvs)}
    raise ValueError(f"unknown subcommand {subcommand!r}")


_SCRIPT_HEADER = '''\
#!/usr/bin/env python3
"""Regenerate the figure for this result directory from its CSV files.

Auto-generated; needs only matplotlib and numpy.  Run it from the
directory containing the CSVs:  python3 plot.py
"""

import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def columns(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    out = {}
    for k, name in enumerate(rows[0]):
        try:
            out[name] = np.array([float(row[k]) for row in rows[1:]])
        except ValueError:
            out[name] = np.array([row[k] for row in rows[1:]])
    return out

'''

_SCRIPT_BODIES = {
    "limiting-curvature": '''\
cols = columns("limiting.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(cols["t"], cols["k_plus"], label="k toward +normal")
ax.plot(cols["t"], cols["k_minus"], label="k toward -normal", ls="--")
ax.set_xlabel("curve parameter t")
ax.set_ylabel("limiting-circle curvature")
ax.legend()
fig.savefig("limiting.png", dpi=120)
''',
    "admissibility": '''\
samples = columns("samples.csv")
margin = columns("margin.csv")
fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
a.plot(samples["t"], samples["h"], label="signed curvature h")
a.plot(samples["t"], samples["k_plus"], label="k+", ls="--")
a.plot(samples["t"], -samples["k_minus"], label="-k-", ls=":")
a.set_xlabel("t")
a.legend()
b.plot(margin["eps"], margin["margin"])
b.axhline(0.0, color="k", lw=0.5)
b.set_xlabel("frequency ratio eps")
b.set_ylabel("margin")
fig.tight_layout()
fig.savefig("admissibility.png", dpi=120)
''',
    "periods-scan": '''\
cols = columns("periods.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for e in sorted(set(cols["eps"])):
    sel = cols["eps"] == e
    mag = np.maximum(cols["abs"][sel], 1e-300)
    ax.loglog(cols["lambda"][sel], mag, marker="o", label=f"eps={e:g}")
ax.set_xlabel("frequency lambda")
ax.set_ylabel("|period|")
ax.legend(fontsize=8)
fig.savefig("periods.png", dpi=120)
''',
    "phase-check": '''\
cols = columns("grid.csv")
fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
a.plot(cols["r"], np.abs(cols["d2phi_ts"]), ".", ms=3, label="|mixed|")
rr = np.linspace(cols["r"].min(), cols["r"].max(), 64)
a.plot(rr, 2.0 / rr, "k--", label="2/r")
a.set_xlabel("separation r")
a.legend()
diff = np.abs(cols["d2phi_ss"] - cols["fd_ss"])
b.hist(np.log10(np.maximum(diff, 1e-18)), bins=24)
b.set_xlabel("log10 |formula - differences| (ss entry)")
fig.tight_layout()
fig.savefig("phase.png", dpi=120)
''',
    "decay-scan": '''\
cols = columns("periods.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for e in sorted(set(cols["eps"])):
    sel = cols["eps"] == e
    mag = np.maximum(cols["abs"][sel], 1e-300)
    ax.loglog(cols["lambda"][sel], mag, marker="o", label=f"eps={e:g}")
ax.set_xlabel("frequency lambda")
ax.set_ylabel("|period|")
ax.legend(fontsize=8)
fig.savefig("decay.png", dpi=120)
''',
}


def plot_script(subcommand: str) -> str:
    """Standalone script text that rebuilds the bundle's figure."""
    return _SCRIPT_HEADER + _SCRIPT_BODIES[subcommand]
