"""MAP grids for CSR samples and for intensity gradients along y and x."""

import argparse
from collections import Counter

from knuthpp.experiments import csr_stability, gradient_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--ratio", type=float, default=4.0, help="intensity ratio between the gradient ends")
    ap.add_argument("--base-seed", type=int, default=0)
    args = ap.parse_args()
    csr = Counter(csr_stability(args.runs, 1000, args.base_seed))
    print("CSR:", dict(csr.most_common()))
    for axis in ("y", "x"):
        grids = Counter(gradient_study(args.runs // 2, axis, args.ratio, base_seed=args.base_seed + 10**6))
        print(f"{axis}-gradient:", dict(grids.most_common(6)))


if __name__ == "__main__":
    main()
