#!/usr/bin/env python3
"""Recompute the headline inferential statistics from hyper-truth counts alone.

Defaults are the published S1 counts (k of 20 per phenomenon). Pass
``--counts`` to try other values, e.g. ``--counts 14,19,11,10,12``.
"""

from __future__ import annotations

import argparse

from neutro_audit.phenomena import TABLE_ORDER, PhenomenonClass as P
from neutro_audit.stats import chi_square_independence, fisher_exact, wilson_interval

DEFAULT = {
    P.FUTURE_CONTINGENCY: 14,
    P.ETHICAL_CONTRADICTION: 19,
    P.EPISTEMIC_IGNORANCE: 11,
    P.LOGICAL_PARADOX: 10,
    P.VAGUENESS: 12,
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--counts", help="comma list of k in table order (Contingency, Contradiction, "
                                     "Ignorance, Paradox, Vagueness)")
    ap.add_argument("-n", type=int, default=20, help="evaluations per phenomenon")
    ap.add_argument("-z", type=float, default=1.96)
    args = ap.parse_args()

    counts = dict(DEFAULT)
    if args.counts:
        values = [int(v) for v in args.counts.split(",")]
        if len(values) != len(TABLE_ORDER):
            ap.error(f"need {len(TABLE_ORDER)} counts")
        counts = dict(zip(TABLE_ORDER, values))

    table = [[counts[c], args.n - counts[c]] for c in TABLE_ORDER]
    k, n = sum(counts.values()), args.n * len(counts)
    w = wilson_interval(k, n, args.z)
    chi = chi_square_independence(table)
    print(f"pooled {k}/{n} = {k / n:.3f}; Wilson [{w.low:.4f}, {w.high:.4f}]")
    print(f"chi-square {chi.statistic:.4f} on {chi.df} df, p = {chi.p_value:.5f}")
    for c in TABLE_ORDER:
        kc = counts[c]
        fr = fisher_exact([[kc, args.n - kc], [k - kc, n - args.n - (k - kc)]])
        print(f"  {c.label:<24} k={kc:>2}  Fisher one-vs-rest OR {fr.odds_ratio:8.3f}  p = {fr.p_value:.5f}")


if __name__ == "__main__":
    main()
