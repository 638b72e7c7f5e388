"""Figure rendering from core-emitted CSV artifacts.

The assessment core never plots; everything here consumes only its
exported histogram / sample / raster files.
"""

from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def _read_csv(path):
    return pd.read_csv(path, comment="#")


def render_energy_histogram(csv_path, png_path) -> None:
    df = _read_csv(csv_path)
    lo = df["bin_lo"].to_numpy()
    hi = df["bin_hi"].to_numpy()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(lo / 1000.0, df["probability"], width=(hi - lo) / 1000.0,
           align="edge", color="#d4646c", edgecolor="white")
    ax.set_xlabel("total energy [kJ]")
    ax.set_ylabel("probability")
    ax.set_title("Monte Carlo energy distribution")
    fig.tight_layout()
    fig.savefig(png_path, dpi=140)
    plt.close(fig)


def render_risk_histogram(csv_path, png_path) -> None:
    df = _read_csv(csv_path)
    lo = df["bin_lo"].to_numpy()
    hi = df["bin_hi"].to_numpy()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(lo, df["density"], width=hi - lo, align="edge",
           color="#4670b0", edgecolor="white")
    ax.set_xlabel("risk score")
    ax.set_ylabel("density")
    ax.set_title("risk distribution")
    fig.tight_layout()
    fig.savefig(png_path, dpi=140)
    plt.close(fig)


def render_coverage_contour(raster_csv, png_path, goals_csv=None) -> None:
    df = _read_csv(raster_csv)
    xs = np.sort(df["x"].unique())
    ys = np.sort(df["y"].unique())
    grid = df.pivot(index="y", columns="x", values="cvar") \
        .reindex(index=ys, columns=xs).to_numpy()
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    cf = ax.contourf(xs, ys, grid, levels=14, cmap="RdYlGn_r")
    fig.colorbar(cf, ax=ax, label="CVaR")
    if goals_csv and os.path.exists(goals_csv):
        goals = _read_csv(goals_csv)
        ax.plot(goals["x"], goals["y"], "k.", markersize=4)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("coverage risk contour")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(png_path, dpi=140)
    plt.close(fig)


def render_all(artifact_dir, dest_dir) -> list[str]:
    os.makedirs(dest_dir, exist_ok=True)
    made = []
    jobs = [
        ("energy_histogram.csv", "energy_histogram.png",
         render_energy_histogram),
        ("risk_histogram.csv", "risk_histogram.png", render_risk_histogram),
    ]
    for src, dst, fn in jobs:
        src_path = os.path.join(artifact_dir, src)
        if os.path.exists(src_path):
            out = os.path.join(dest_dir, dst)
            fn(src_path, out)
            made.append(out)
    raster = os.path.join(artifact_dir, "coverage_raster.csv")
    if os.path.exists(raster):
        out = os.path.join(dest_dir, "coverage_contour.png")
        render_coverage_contour(raster, out,
                                os.path.join(artifact_dir,
                                             "coverage_goals.csv"))
        made.append(out)
    return made
