"""Render a simulated field CSV (grid layout) as a PNG heat map.

Usage: python scripts/plot_field.py fields.csv nx ny out.png [row]

Works on the quantile-scale or raw CSVs emitted by `nsmaxstab simulate`
and by the storm-field test artifacts. Requires matplotlib, which the
package itself does not depend on.
"""

import sys

import numpy as np


def main():
    if len(sys.argv) < 5:
        print(__doc__)
        return 1
    path, nx, ny, out = sys.argv[1:5]
    row = int(sys.argv[5]) if len(sys.argv) > 5 else 0
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    field = values[row].reshape(int(nx), int(ny))
    fig, ax = plt.subplots(figsize=(5, 5 * field.shape[1] / field.shape[0]))
    im = ax.imshow(field.T, origin="lower", cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(f"{path} (replicate {row})")
    fig.savefig(out, dpi=150, bbox_inches="tight")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
