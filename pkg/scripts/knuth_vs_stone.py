"""L1/L2 distance to the true density: Knuth vs Stone on Gaussian samples."""

import argparse

import numpy as np

from knuthpp.io import write_csv
from knuthpp.stone import gaussian_comparison_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--datasets", type=int, default=50)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-o", "--output", default="knuth_vs_stone.csv")
    args = ap.parse_args()
    rows = gaussian_comparison_study(args.datasets, args.n, args.seed)
    write_csv(
        args.output,
        ["dataset", "knuth_m", "stone_m", "knuth_l1", "knuth_l2", "stone_l1", "stone_l2"],
        ([r.dataset, r.knuth_m, r.stone_m, r.knuth_l1, r.knuth_l2, r.stone_l1, r.stone_l2] for r in rows),
    )
    for norm in ("l1", "l2"):
        wins = np.mean([getattr(r, f"knuth_{norm}") <= getattr(r, f"stone_{norm}") for r in rows])
        print(f"{norm}: Knuth <= Stone in {wins:.0%}")
    print(f"median M: Knuth {np.median([r.knuth_m for r in rows]):g}, Stone {np.median([r.stone_m for r in rows]):g}")


if __name__ == "__main__":
    main()
