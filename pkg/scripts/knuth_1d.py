"""MAP bin counts of 1D Knuth binning on uniform, four-step and Gaussian samples."""

import argparse

import numpy as np

from knuthpp.experiments import knuth_1d_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--base-seed", type=int, default=0)
    args = ap.parse_args()
    for kind, ms in knuth_1d_study(args.seeds, args.n, args.base_seed).items():
        values, counts = np.unique(ms, return_counts=True)
        print(f"{kind:10s} median M={np.median(ms):g}  " + " ".join(f"{v}:{c}" for v, c in zip(values, counts)))


if __name__ == "__main__":
    main()
