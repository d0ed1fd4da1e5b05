"""Figures rendered from the CSV/JSON files the CLI writes.

Each function reads its inputs back from disk rather than from in-memory
results, so a figure can never disagree with the data files beside it.
"""

import csv
import json
import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bounds import frac_bound, quartile_eps  # noqa: E402

FIGSIZE = (8, 6)
DPI = 100

STYLE = {
    "svg.hashsalt": "zeroloss",
    "svg.fonttype": "path",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _save(fig, path):
    fmt = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if fmt in ("svg", "pdf") else None
    fig.savefig(path, dpi=DPI, metadata=meta)
    plt.close(fig)
    return path


def plot_separable(trials_csv, summary_json, out_path, R_values=(), tight=True):
    """Test-error spread per n (top) and exceedance fractions on a log scale (bottom)."""
    records = _read_csv(trials_csv)
    with open(summary_json, encoding="utf-8") as fh:
        summary = json.load(fh)
    if isinstance(summary, dict):
        summary = summary["rows"]

    by_n = defaultdict(list)
    for r in records:
        if r["status"] == "ok":
            by_n[int(r["n"])].append(float(r["test_error"]))
    ns = np.array([row["n"] for row in summary])

    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, figsize=FIGSIZE, sharex=True)
        for n, errs in by_n.items():
            jitter = np.full(len(errs), n)
            top.plot(jitter, errs, "x", color="tab:red", alpha=0.15, ms=3)
        qkeys = sorted(summary[0]["quantiles"], key=float)
        if len(qkeys) >= 2:
            lo = [row["quantiles"][qkeys[0]] for row in summary]
            hi = [row["quantiles"][qkeys[-1]] for row in summary]
            top.fill_between(ns, lo, hi, color="grey", alpha=0.2, lw=0)
        for q in qkeys:
            vals = [row["quantiles"][q] for row in summary]
            style = "-" if math.isclose(float(q), 0.5) else "--"
            top.plot(ns, vals, style, color="black", lw=1, label=f"{float(q):.0%} quantile")
        for R in R_values:
            eps = [quartile_eps(R, int(n), 0.25)[0] for n in ns]
            top.plot(ns, eps, color="tab:green", lw=1, label=f"25% bound, R={R:g}")
        top.set_ylabel("test error")
        top.set_ylim(0, None)
        top.legend(loc="upper right")

        ekeys = sorted(summary[0]["exceed_fractions"], key=float)
        for k, e in enumerate(ekeys):
            eps = float(e)
            ls = ("-", "--", ":", "-.")[k % 4]
            frac = np.array([row["exceed_fractions"][e] for row in summary])
            pos = frac > 0
            bottom.semilogy(ns[pos], frac[pos], "o" + ls, color="tab:red", ms=3, label=f"fraction E >= {eps:g}")
            for R in R_values:
                bottom.semilogy(
                    ns, [frac_bound(R, n, eps) for n in ns], ls, color="tab:green", lw=1,
                    label=f"R e^(-{eps:g} n), R={R:g}",
                )
            if tight and pos.any():
                r_tight = max(f * math.exp(eps * n) for n, f in zip(ns, frac))
                bottom.semilogy(
                    ns, [frac_bound(r_tight, n, eps) for n in ns], ls, color="tab:blue", lw=1,
                    label=f"R e^(-{eps:g} n), R={r_tight:.3g}",
                )
        bottom.set_xlabel("training samples n")
        bottom.set_ylabel("fraction of runs")
        bottom.legend(loc="lower left")
        fig.tight_layout()
        return _save(fig, out_path)


def plot_doc(curve_csv, out_path, curve="qn"):
    rows = _read_csv(curve_csv)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        if curve == "qn":
            groups = defaultdict(lambda: ([], []))
            for r in rows:
                xs, ys = groups[int(r["n"])]
                xs.append(float(r["E"]))
                ys.append(float(r["q_n"]))
            for n, (xs, ys) in sorted(groups.items()):
                ax.plot(xs, ys, lw=1, label=f"n={n}")
            ax.set_xlabel("true error E")
            ax.set_ylabel("Q_n(E)")
            ax.set_xlim(0, 1)
        else:
            n = np.array([float(r["n"]) for r in rows])
            quad = np.array([float(r["expected_error"]) for r in rows])
            ax.plot(n, quad, "o-", ms=3, label="quadrature")
            if rows and rows[0].get("expected_error_closed"):
                closed = np.array([float(r["expected_error_closed"]) for r in rows])
                ax.plot(n, closed, "--", label="closed form (E_max = 1)")
            if (n > 0).all():
                ax.set_xscale("log")
            ax.set_xlabel("training samples n")
            ax.set_ylabel("expected true error")
        ax.legend()
        fig.tight_layout()
        return _save(fig, out_path)


def plot_fit(data_csv, curve_csv, fit_json, out_path):
    """Data with the fitted curve (top) and log deviation from e_min vs log n (bottom)."""
    data = _read_csv(data_csv)
    curve = _read_csv(curve_csv)
    with open(fit_json, encoding="utf-8") as fh:
        fit = json.load(fh)
    e_min = fit["parameters"]["e_min"]

    dn = np.array([float(r["n"]) for r in data])
    dy = np.array([float(r["mean_error"]) for r in data])
    dstd = np.array([float(r["std_error"]) if r.get("std_error") else 0.0 for r in data])
    cn = np.array([float(r["n"]) for r in curve])
    cy = np.array([float(r["mean_error"]) for r in curve])

    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, figsize=FIGSIZE)
        top.errorbar(dn, dy, yerr=dstd if dstd.any() else None, fmt="o", ms=3, color="black", label="data")
        pos = cn > 0
        top.plot(cn[pos], cy[pos], color="tab:red", label="fit")
        top.set_xscale("log")
        top.set_ylabel("mean test error")
        p = fit["parameters"]
        top.set_title(f"E_min={p['e_min']:.4g}, eta={p['eta']:.4g}, E0={p['e0']:.4g}")
        top.legend()

        dev = dy - e_min
        ok = (dn > 0) & (dev > 0)
        bottom.loglog(dn[ok], dev[ok], "x", color="tab:green", label="data - E_min")
        okc = pos & (cy - e_min > 0)
        bottom.loglog(cn[okc], cy[okc] - e_min, color="tab:red", label="fit - E_min")
        bottom.set_xlabel("training samples n")
        bottom.set_ylabel("deviation from E_min")
        bottom.legend()
        fig.tight_layout()
        return _save(fig, out_path)
