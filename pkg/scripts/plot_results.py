#!/usr/bin/env python3
"""Render the benchmark curves from a results directory.

    python3 scripts/plot_results.py results

Reads the plotdata/*.dat files emitted by `meshcal run` and writes
errors.png (median dT_max and dF~_95 vs epsilon, log-log, with quartile
bands) and timing.png (median reconstruction seconds vs N).
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

MODES = ("full", "intensity")
COLORS = {"full": "tab:blue", "intensity": "tab:red"}


def read_dat(path):
    data = np.loadtxt(path)
    return np.atleast_2d(data)


def plot_errors(plotdata, out):
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, metric, label in zip(
        axes, ("delta_t_max", "delta_f95"), (r"median $\Delta T_{max}$", r"median $\Delta\tilde F_{95}$")
    ):
        for mode in MODES:
            path = plotdata / f"{metric}_{mode}.dat"
            if not path.exists():
                continue
            x, med, q25, q75 = read_dat(path).T
            ax.loglog(x, med, "o-", color=COLORS[mode], label=mode)
            ax.fill_between(x, q25, q75, color=COLORS[mode], alpha=0.2)
        ax.set_xlabel(r"$\epsilon$")
        ax.set_ylabel(label)
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "errors.png", dpi=150)


def plot_timing(plotdata, out):
    fig, ax = plt.subplots(figsize=(5, 4))
    for mode in MODES:
        path = plotdata / f"seconds_{mode}.dat"
        if not path.exists():
            continue
        x, med, q25, q75 = read_dat(path).T
        ax.semilogy(x, med, "o-", color=COLORS[mode], label=mode)
        ax.fill_between(x, q25, q75, color=COLORS[mode], alpha=0.2)
    ax.set_xlabel("N = K")
    ax.set_ylabel("reconstruction time, s")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "timing.png", dpi=150)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("results", type=Path, help="results directory from `meshcal run`")
    args = parser.parse_args()
    plotdata = args.results / "plotdata"
    if not plotdata.is_dir():
        raise SystemExit(f"no plotdata directory under {args.results}")
    plot_errors(plotdata, args.results)
    plot_timing(plotdata, args.results)
    print(f"wrote {args.results}/errors.png and {args.results}/timing.png")


if __name__ == "__main__":
    main()
