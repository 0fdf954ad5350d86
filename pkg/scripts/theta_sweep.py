"""Smallest observability eigenvalue across quasimomenta, at two cutoffs.

    python3 scripts/theta_sweep.py --T 6.283 --radius 1 --cutoff 15 --n 64 --out sweep.csv
"""
import argparse
import csv
import math

import numpy as np

from obslab.control import obs_gramian, theta_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=2 * math.pi)
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--cutoff", type=int, default=15)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--out", default="theta_sweep.csv")
    args = ap.parse_args()

    rows = []
    for th in theta_grid(args.n):
        lo = obs_gramian(th, args.T, args.radius, args.cutoff).lambda_min()
        hi = obs_gramian(th, args.T, args.radius, 2 * args.cutoff).lambda_min()
        rows.append((th[0], lo, hi))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", f"lambda_min_{args.cutoff}", f"lambda_min_{2 * args.cutoff}"])
        w.writerows(rows)
    lam = np.array([r[1] for r in rows])
    j = int(np.argmin(lam))
    print(f"min lambda {lam[j]:.6g} at theta={rows[j][0]:.4f}; "
          f"ratio at worst theta {rows[j][2] / rows[j][1]:.6f}; wrote {args.out}")


if __name__ == "__main__":
    main()
