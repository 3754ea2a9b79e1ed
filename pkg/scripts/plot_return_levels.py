"""Overlay return-level curve CSVs (N, level, stderr) on one axis.

Usage: python scripts/plot_return_levels.py out.png curve1.csv [curve2.csv ...]

Each curve is labeled by its file name; error bars show the Monte Carlo
standard errors. Requires matplotlib.
"""

import os
import sys

import numpy as np


def main():
    if len(sys.argv) < 3:
        print(__doc__)
        return 1
    out = sys.argv[1]
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for path in sys.argv[2:]:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        ax.errorbar(data[:, 0], data[:, 1], yerr=data[:, 2],
                    label=os.path.basename(path), marker="o", capsize=3)
    ax.set_xscale("log")
    ax.set_xlabel("return period N (years)")
    ax.set_ylabel("return level")
    ax.legend(fontsize=8)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
