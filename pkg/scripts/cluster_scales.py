"""Clump size from Knuth binning and from the pair correlation crossing, for
mTp, hard-core and single-cluster regression ensembles."""

import argparse

import numpy as np

from knuthpp.experiments import cluster_regression, hardcore_study, mtp_clump_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--base-seed", type=int, default=0)
    args = ap.parse_args()
    for name, runs in (
        ("mTp", mtp_clump_study(args.seeds, args.base_seed)),
        ("hard-core", hardcore_study(args.seeds, base_seed=args.base_seed)),
    ):
        cross = [r.g_crossing for r in runs if r.g_crossing is not None]
        print(
            f"{name}: median binning diameter {np.median([r.binning_diameter for r in runs]):.1f}, "
            f"median g crossing {np.median(cross):.1f}"
        )
    for kind in ("square-uniform", "disk-uniform", "gaussian"):
        res = cluster_regression(kind, base_seed=args.base_seed)
        print(f"{kind}: slope {res.slope:.4f} intercept {res.intercept:.1f} R2 {res.r2:.3f}")


if __name__ == "__main__":
    main()
