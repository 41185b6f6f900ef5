#!/usr/bin/env python3
"""Monte Carlo estimate of the hyper-truth share of the unit cube.

The exact value is 5/6 (the complement is the corner simplex of volume 1/6).
Prints the estimate and its standard error for growing sample sizes.
"""

from __future__ import annotations

import argparse
import math

from neutro_audit.svns import hypertruth_region_volume

EXACT = 5 / 6


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-exp", type=int, default=7, help="largest sample size as a power of ten")
    args = ap.parse_args()

    print(f"{'n':>10}  {'estimate':>9}  {'std err':>8}  {'error':>9}")
    for e in range(3, args.max_exp + 1):
        n = 10**e
        v = hypertruth_region_volume(n, seed=args.seed)
        se = math.sqrt(v * (1 - v) / n)
        print(f"{n:>10}  {v:>9.5f}  {se:>8.5f}  {v - EXACT:>+9.5f}")
    print(f"exact: {EXACT:.5f}")


if __name__ == "__main__":
    main()
