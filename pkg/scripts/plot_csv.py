#!/usr/bin/env python3
"""Plot any CSV written by ``ntot sweep`` (needs matplotlib).

    python scripts/plot_csv.py success_exact.csv success_exact.png

Residual tables become one curve per (algorithm, eps, lam) against the
iteration; sweep tables become one curve per algorithm against the axis.
"""
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ntot.io import read_csv


def main(src, dst):
    rows = read_csv(src)
    cols = list(rows[0])
    curves = defaultdict(list)
    if "iteration" in cols:
        for r in rows:
            label = r["algorithm"]
            if r["epsilon"]:
                label += f" eps={float(r['epsilon']):.4g} lam={float(r['lambda']):.4g}"
            curves[label].append((int(r["iteration"]), float(r["residual_l2"])))
        xlabel, ylabel, logy = "iteration", "||y - Ax||", True
    else:
        ycol = "success_rate" if "success_rate" in cols else "avg_iterations"
        for r in rows:
            curves[r["algorithm"]].append((float(r["axis_value"]), float(r[ycol])))
        xlabel, ylabel, logy = rows[0]["axis"].replace("_over_", "/"), ycol, False
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in curves.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", ms=3, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(dst, dpi=150)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
