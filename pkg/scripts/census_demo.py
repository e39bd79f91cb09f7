"""Write a synthetic multi-species census and run the batch pipeline on it."""

import argparse
from pathlib import Path

from knuthpp.core import Window
from knuthpp.generators import synthetic_census
from knuthpp.io import parse_config_text, write_census_csv
from knuthpp.pipeline import run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--species", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("-o", "--output-dir", type=Path, default=Path("census_output"))
    args = ap.parse_args()
    args.output_dir.mkdir(parents=True, exist_ok=True)
    census = args.output_dir / "census.csv"
    write_census_csv(synthetic_census(Window(0, 1000, 0, 500), args.species, args.seed), census)
    config = parse_config_text(
        f"input = {census.resolve()}\nwindow = 0,1000,0,500\nseed = {args.seed}\n"
        "analyses = knuth, fit-thomas, indices\n"
        f"output_dir = {(args.output_dir / 'results').resolve()}\n"
    )
    result = run_pipeline(config, args.workers)
    print(f"exit {result.exit_code}: {result.message}; results in {result.output_dir}")


if __name__ == "__main__":
    main()
