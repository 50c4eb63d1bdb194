"""Render plots from hexperc CSV reports.

Point this at a directory containing outputs of the clt, figure2 and
figure4 commands; it writes a PNG next to each report it finds.

    python docs/plot_figures.py results/
"""

import argparse
import csv
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def plot_clt(directory):
    files = sorted(directory.glob("clt_cdf_n*.csv"),
                   key=lambda p: int(p.stem.rsplit("n", 1)[1]))
    if not files:
        return
    fig, ax = plt.subplots(figsize=(7, 5))
    grid = [x / 100 for x in range(-400, 401)]
    ax.plot(grid, [0.5 * math.erfc(-x / math.sqrt(2)) for x in grid],
            color="black", lw=1, label="normal")
    for path in files:
        rows = read_rows(path)
        xs = [float(r["x"]) for r in rows]
        levels = [float(r["level"]) for r in rows]
        n = path.stem.rsplit("n", 1)[1]
        ax.step([xs[0] - 1] + xs, [0.0] + levels, where="post", label=f"n={n}")
    ax.set_xlim(-4, 4)
    ax.set_xlabel("standardized percolating fraction")
    ax.set_ylabel("CDF")
    ax.legend()
    fig.savefig(directory / "clt_cdfs.png", dpi=150, bbox_inches="tight")
    print(f"wrote {directory / 'clt_cdfs.png'}")


def plot_figure2(directory):
    path = directory / "figure2.csv"
    if not path.exists():
        return
    rows = read_rows(path)
    ks = sorted({int(r["k"]) for r in rows})
    fig, ax = plt.subplots(figsize=(7, 5))
    for k in ks:
        series = sorted((int(r["s"]), float(r["b_hat"]),
                         float(r["b_lo"]), float(r["b_hi"]))
                        for r in rows if int(r["k"]) == k)
        s_vals = [s for s, *_ in series]
        hat = [h for _, h, _, _ in series]
        err = [[h - lo for _, h, lo, _ in series],
               [hi - h for _, h, _, hi in series]]
        ax.errorbar(s_vals, hat, yerr=err, marker="o", capsize=3,
                    label=f"exactly {k}")
    ax.set_xlabel("lattice side s")
    ax.set_ylabel("frequency")
    ax.legend()
    fig.savefig(directory / "figure2.png", dpi=150, bbox_inches="tight")
    print(f"wrote {directory / 'figure2.png'}")


def plot_figure4(directory):
    path = directory / "figure4.csv"
    if not path.exists():
        return
    rows = [r for r in read_rows(path) if r["ratio"]]
    if not rows:
        return
    s_vals = [int(r["s"]) for r in rows]
    ratio = [float(r["ratio"]) for r in rows]
    err = [[r - float(row["ratio_lo"]) for r, row in zip(ratio, rows)],
           [float(row["ratio_hi"]) - r for r, row in zip(ratio, rows)]]
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.errorbar(s_vals, ratio, yerr=err, marker="o", capsize=3)
    ax.axhline(1.0, color="black", lw=1, ls="--")
    ax.set_xlabel("lattice side s")
    ax.set_ylabel("all-fluids frequency / p_hat**n")
    fig.savefig(directory / "figure4.png", dpi=150, bbox_inches="tight")
    print(f"wrote {directory / 'figure4.png'}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory", type=Path, help="directory with CSV reports")
    args = parser.parse_args()
    if not args.directory.is_dir():
        sys.exit(f"not a directory: {args.directory}")
    plot_clt(args.directory)
    plot_figure2(args.directory)
    plot_figure4(args.directory)


if __name__ == "__main__":
    main()
