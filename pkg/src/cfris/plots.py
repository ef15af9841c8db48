"""Render campaign figures (convergence, CDF, power sweep) from the CSVs a
campaign wrote, saving PNGs next to the delimited output."""

from __future__ import annotations

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _point_label(row):
    return f"{row['architecture']} @ {row['p_max_dbm']} dBm"


def plot_convergence(csv_path: str, out_path: str) -> None:
    rows = _read_csv(csv_path)
    traces = defaultdict(dict)
    for row in rows:
        if row["trial"] != "0":
            continue
        traces[_point_label(row)][int(row["iteration"])] = float(row["sum_rate"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in sorted(traces.items()):
        its = sorted(pts)
        ax.plot(its, [pts[i] for i in its], marker="o", markersize=3, label=label)
    ax.set_xlabel("FP iteration")
    ax.set_ylabel("sum rate [bits/s/Hz]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_cdf(csv_path: str, out_path: str) -> None:
    rows = _read_csv(csv_path)
    curves = defaultdict(list)
    for row in rows:
        curves[(f"{_point_label(row)} {row['method']}")].append(
            (float(row["sum_rate"]), float(row["probability"]))
        )
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in sorted(curves.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=label)
    ax.set_xlabel("sum rate [bits/s/Hz]")
    ax.set_ylabel("empirical CDF")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_sweep(csv_path: str, out_path: str) -> None:
    rows = _read_csv(csv_path)
    curves = defaultdict(list)
    for row in rows:
        curves[(row["architecture"], row["method"])].append(
            (float(row["p_max_dbm"]), float(row["mean_sum_rate"]), float(row["stderr_sum_rate"]))
        )
    fig, ax = plt.subplots(figsize=(6, 4))
    for (arch, method), pts in sorted(curves.items()):
        pts.sort()
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        es = [p[2] for p in pts]
        ax.errorbar(xs, ys, yerr=es, marker="o", markersize=3, capsize=2,
                    label=f"{arch} {method}")
    ax.set_xlabel("P_max [dBm]")
    ax.set_ylabel("mean sum rate [bits/s/Hz]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_campaign(out_dir: str) -> list:
    """Render every figure whose source CSV exists in ``out_dir``."""
    made = []
    jobs = [
        ("convergence.csv", "convergence.png", plot_convergence),
        ("cdf.csv", "cdf.png", plot_cdf),
        ("aggregate.csv", "sweep.png", plot_sweep),
    ]
    for src, dst, fn in jobs:
        src_path = os.path.join(out_dir, src)
        if os.path.exists(src_path):
            dst_path = os.path.join(out_dir, dst)
            fn(src_path, dst_path)
            made.append(dst_path)
    return made
