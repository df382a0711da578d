"""Tabulate the exact converted epsilon, the closed form and the earlier bound over a gamma grid."""
import argparse

import numpy as np

from gaussmix.calibration import compare_bounds, write_bounds_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k", type=int, nargs="+", default=[1, 10, 100])
    p.add_argument("--delta", type=float, nargs="+", default=[1e-3, 1e-5, 1e-7])
    p.add_argument("--points", type=int, default=40)
    p.add_argument("--outdir", default=".")
    args = p.parse_args()
    grid = np.geomspace(20, 1e4, args.points)
    for k in args.k:
        for delta in args.delta:
            rows = compare_bounds(grid, k, delta)
            path = f"{args.outdir}/bounds_k{k}_delta{delta:g}.csv"
            write_bounds_csv(rows, path)
            print(f"{path}: max ratio {max(r.ratio for r in rows):.4f}")


if __name__ == "__main__":
    main()
