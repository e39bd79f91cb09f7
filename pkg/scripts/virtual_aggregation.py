"""g and K2 of an mTp pattern in its own window vs a void-extended window."""

import argparse

from knuthpp.experiments import mtp_pattern, virtual_aggregation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    v = virtual_aggregation(mtp_pattern(args.seed))
    print(f"g(extended) > g(original) at {v.frac_g_higher:.0%} of r > 5")
    print(f"max gap: g {v.g_gap:.3f}, K2 {v.k2_gap:.3f}")
    print(f"Knuth grid: original {v.grid_original}, extended {v.grid_extended}")


if __name__ == "__main__":
    main()
