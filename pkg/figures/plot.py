#!/usr/bin/env python3
"""Regenerate figure panels from solver run directories.

Reads only the delimited outputs a run leaves behind (diagnostics.csv,
rho_t*.csv, f_t*.csv, manifest.txt) and renders one image per invocation:

    python figures/plot.py --run DIR [--run DIR2 ...] --panel NAME --out FILE

Panels: density_lines, f_heatmap, rho_heatmap, rank_trace, hnorm_trace,
kappa_trace.  Multiple --run directories overlay with a legend; heatmap
panels use the first run (optionally --time to pick the snapshot).
"""

import argparse
import csv
import math
import re
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams.update({
    "font.size": 11,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.constrained_layout.use": True,
})

PANELS = ("density_lines", "f_heatmap", "rho_heatmap",
          "rank_trace", "hnorm_trace", "kappa_trace")

DIAG_COLUMNS = ("t", "rank", "h_norm_sq", "kappa_plus", "kappa_minus", "mass")


class RunDir:
    """Lazy reader for one run directory."""

    def __init__(self, path):
        self.path = Path(path)
        if not (self.path / "diagnostics.csv").exists():
            raise FileNotFoundError(f"{path}: no diagnostics.csv (not a run directory?)")
        self.manifest = {}
        manifest_path = self.path / "manifest.txt"
        if manifest_path.exists():
            for line in manifest_path.read_text().splitlines():
                if "=" in line:
                    key, value = line.split("=", 1)
                    self.manifest[key.strip()] = value.strip()

    @property
    def label(self):
        scheme = self.manifest.get("scheme")
        return scheme if scheme else self.path.name

    def diagnostics(self):
        with open(self.path / "diagnostics.csv", newline="") as handle:
            reader = csv.DictReader(handle)
            missing = [c for c in DIAG_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise ValueError(f"{self.path}/diagnostics.csv: missing columns {missing}")
            rows = list(reader)
        return {c: np.array([float(r[c]) for r in rows]) for c in DIAG_COLUMNS}

    def snapshot_times(self):
        times = []
        for f in sorted(self.path.glob("rho_t*.csv")):
            match = re.match(r"rho_t([0-9.]+)\.csv", f.name)
            if match:
                times.append(float(match.group(1)))
        return times

    def rho_1d(self, t):
        data = np.loadtxt(self.path / f"rho_t{t:.6f}.csv", delimiter=",", skiprows=1)
        return data[:, 0], data[:, 1]

    def rho_2d(self, t):
        path = self.path / f"rho_t{t:.6f}.csv"
        header = path.open().readline().strip()
        match = re.match(r"# nx1=(\d+) nx2=(\d+) domain=\[(.+?),(.+?)\]x\[(.+?),(.+?)\]", header)
        if not match:
            raise ValueError(f"{path}: malformed grid header {header!r}")
        nx1, nx2 = int(match.group(1)), int(match.group(2))
        extent = tuple(float(match.group(i)) for i in (3, 4, 5, 6))
        grid = np.loadtxt(path, delimiter=",", skiprows=1)
        return grid.reshape(nx1, nx2), extent

    def f_1d(self, t):
        path = self.path / f"f_t{t:.6f}.csv"
        header = path.open().readline().strip()
        if not header.startswith("# v="):
            raise ValueError(f"{path}: missing velocity-node header")
        v = np.array([float(s) for s in header[4:].split(",")])
        f = np.loadtxt(path, delimiter=",", skiprows=1)
        return f, v


def _common_times(runs):
    common = set(runs[0].snapshot_times())
    for run in runs[1:]:
        common &= set(run.snapshot_times())
    return sorted(common)


def panel_density_lines(runs, out_file, time=None):
    times = [time] if time is not None else _common_times(runs)
    if not times:
        raise ValueError("no common density snapshots between the runs")
    ncols = len(times)
    fig, axes = plt.subplots(1, ncols, figsize=(4.2 * ncols, 3.4), squeeze=False)
    for ax, t in zip(axes[0], times):
        for run in runs:
            x, rho = run.rho_1d(t)
            ax.plot(x, rho, lw=1.4, label=run.label)
        ax.set_title(f"t = {t:g}")
        ax.set_xlabel("x")
    axes[0, 0].set_ylabel("density")
    axes[0, -1].legend()
    fig.savefig(out_file, dpi=150)
    plt.close(fig)


def panel_f_heatmap(runs, out_file, time=None):
    run = runs[0]
    t = time if time is not None else run.snapshot_times()[-1]
    f, v = run.f_1d(t)
    x, _ = run.rho_1d(t)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    mesh = ax.pcolormesh(x, v, f.T, shading="nearest", cmap="inferno")
    fig.colorbar(mesh, ax=ax, label="f")
    ax.set_xlabel("x")
    ax.set_ylabel("v")
    ax.set_title(f"{run.label}, t = {t:g}")
    fig.savefig(out_file, dpi=150)
    plt.close(fig)


def panel_rho_heatmap(runs, out_file, time=None):
    run = runs[0]
    t = time if time is not None else run.snapshot_times()[-1]
    grid, extent = run.rho_2d(t)
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    mesh = ax.imshow(grid.T, origin="lower", extent=extent, cmap="inferno",
                     aspect="equal")
    fig.colorbar(mesh, ax=ax, label="density")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"{run.label}, t = {t:g}")
    fig.savefig(out_file, dpi=150)
    plt.close(fig)


def _trace_panel(runs, out_file, column, ylabel, logy=False, hline=None):
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    for run in runs:
        diags = run.diagnostics()
        if column == "kappa":
            ax.plot(diags["t"], diags["kappa_plus"], lw=1.2,
                    label=f"{run.label} max")
            ax.plot(diags["t"], diags["kappa_minus"], lw=1.2, ls="--",
                    label=f"{run.label} min")
        else:
            ax.plot(diags["t"], diags[column], lw=1.4, label=run.label)
    if hline is not None:
        ax.axhline(hline, color="red", lw=1.0, zorder=0)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.savefig(out_file, dpi=150)
    plt.close(fig)


def panel_rank_trace(runs, out_file, time=None):
    _trace_panel(runs, out_file, "rank", "rank")


def panel_hnorm_trace(runs, out_file, time=None):
    _trace_panel(runs, out_file, "h_norm_sq", "squared stability norm", logy=True)


def panel_kappa_trace(runs, out_file, time=None):
    _trace_panel(runs, out_file, "kappa", "moment bounds", hline=1.0)


def render(run_dirs, panel, out_file, time=None):
    runs = [RunDir(d) for d in run_dirs]
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    globals()[f"panel_{panel}"](runs, out, time=time)
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--run", action="append", required=True, dest="runs",
                        help="run directory (repeat to overlay)")
    parser.add_argument("--panel", required=True, choices=PANELS)
    parser.add_argument("--out", required=True, help="output image file")
    parser.add_argument("--time", type=float, default=None,
                        help="snapshot time for snapshot panels")
    args = parser.parse_args(argv)
    try:
        out = render(args.runs, args.panel, args.out, time=args.time)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
