#!/usr/bin/env python3
"""Regenerate all four reference-figure datasets (CSV + manifest per figure).

Equivalent to running `hsc reproduce --figure N` for N in 2..5; exists so the
full dataset drop is one command:

    python scripts/reproduce_figures.py --out results/ --seed 42
"""
import argparse
import sys
import time

from hsc.cli import DEFAULT_HORIZON, DEFAULT_SEED, DEFAULT_TRIALS, run_reproduce


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    parser.add_argument("--horizon", type=float, default=DEFAULT_HORIZON)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument(
        "--figures", default="2,3,4,5", help="comma-separated subset, e.g. 2,5"
    )
    args = parser.parse_args(argv)

    for figure in (int(tok) for tok in args.figures.split(",") if tok.strip()):
        t0 = time.perf_counter()
        paths = run_reproduce(
            figure,
            args.out,
            trials=args.trials,
            horizon=args.horizon,
            seed=args.seed,
            workers=args.workers,
        )
        print(
            f"figure {figure}: {paths['csv']} + {paths['manifest']} "
            f"({time.perf_counter() - t0:.1f}s)"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
