"""Gap decompositions of lifted lattices over a range of quasimomenta."""
import argparse
import math

import numpy as np

from obslab.lattice import build_lifted, decompose, ingham_c


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--cutoff", type=int, default=20)
    ap.add_argument("--n", type=int, default=16, help="quasimomenta per axis")
    ap.add_argument("--factor", type=float, default=6.0, help="R as a multiple of c")
    args = ap.parse_args()

    c = ingham_c(args.d + 1, 1.01)
    R = args.factor * c
    axis = np.linspace(-math.pi, math.pi, args.n, endpoint=False)
    grid = np.stack(np.meshgrid(*([axis] * args.d), indexing="ij"), -1).reshape(-1, args.d)
    print(f"c={c:.4f} R={R:.4f}")
    print("theta".ljust(24), "N", "budget", "alpha", "beta", sep="\t")
    for th in grid[:: max(1, len(grid) // 12)]:
        dec = decompose(build_lifted(th, args.cutoff, args.d), R, c)
        p = dec.params
        print(np.array2string(th, precision=3).ljust(24), dec.n_subsets, f"{dec.budget:.3f}",
              f"{p.alpha:.2f}", f"{p.beta:.2f}", sep="\t")


if __name__ == "__main__":
    main()
