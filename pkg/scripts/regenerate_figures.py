#!/usr/bin/env python3
"""Regenerate the data and gnuplot scripts for every figure.

Usage: python scripts/regenerate_figures.py [--out results] [--threads N] [names ...]

Each figure goes through the same code path as ``ringcavity figure <name>``.
Exit status is the worst status seen (3 when some scan points failed).
"""
import argparse
import sys
import time

from ringcavity.cli import main
from ringcavity.figures import FIGURES


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=list(FIGURES))
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    worst = 0
    for name in args.names:
        t0 = time.perf_counter()
        code = main(["figure", name, "--out", args.out, "--threads", str(args.threads)])
        print(f"{name}: exit {code} in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
