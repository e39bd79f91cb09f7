"""Anisotropy index for a rotated anisotropic Gaussian cluster and for an
isotropic mTp ensemble."""

import argparse

import numpy as np

from knuthpp.experiments import anisotropic_gaussian_study, isotropic_mtp_anisotropy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--base-seed", type=int, default=0)
    args = ap.parse_args()
    for angle in (0, 90, 45, 135):
        runs = anisotropic_gaussian_study(angle, args.seeds, base_seed=args.base_seed)
        ax = np.median([r.a_x for r in runs])
        ay = np.median([r.a_y for r in runs])
        low = np.mean([r.index < 0.15 for r in runs])
        print(f"{angle:3d} deg: median a_x {ax:.1f} a_y {ay:.1f}, I_an < 0.15 in {low:.0%}")
    iso = isotropic_mtp_anisotropy(base_seed=args.base_seed)
    hist, _ = np.histogram(iso, bins=np.linspace(0, 1, 11))
    print(f"isotropic mTp: median I_an {np.median(iso):.3f}, histogram by 0.1: {hist.tolist()}")


if __name__ == "__main__":
    main()
