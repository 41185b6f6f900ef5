#!/usr/bin/env python3
"""Run the full design against the offline mock and write every table.

    python scripts/run_mock_experiment.py --out-dir results/mock --seed 0
"""

from __future__ import annotations

import argparse
import dataclasses
from pathlib import Path

from neutro_audit.backends import mock_backend
from neutro_audit.profiles import PROFILES
from neutro_audit.prompting import StrategyKind
from neutro_audit.records import validate_and_filter
from neutro_audit.report import build_report, write_report
from neutro_audit.runner import ExperimentConfig, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("results/mock"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--profile", default="table", choices=sorted(PROFILES))
    ap.add_argument("--repetitions", type=int, default=5)
    args = ap.parse_args()

    base = ExperimentConfig(repetitions=args.repetitions)
    config = dataclasses.replace(
        base, backend=dataclasses.replace(base.backend, seed=args.seed, profile=args.profile)
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    records = args.out_dir / "records.jsonl"
    backend = mock_backend(PROFILES[args.profile](), seed=args.seed)
    manifest = run_experiment(config, config.load_bank(), backend, records, overwrite=True)

    dataset, exclusions = validate_and_filter(records)
    bundle = build_report(dataset, exclusions)
    written = write_report(bundle, dataset, args.out_dir / "tables")

    print(f"run {manifest.run_id}: {manifest.records} records, {len(dataset)} valid")
    for strategy, table in bundle.hypertruth.items():
        w = table.wilson
        print(f"  {strategy.value} hyper-truth {table.pooled.k}/{table.pooled.n} "
              f"(Wilson [{w.low:.3f}, {w.high:.3f}])")
    if bundle.chi_square:
        c = bundle.chi_square
        print(f"  S1 chi-square {c.statistic:.2f} on {c.df} df, p = {c.p_value:.4f}")
    s2 = bundle.hypertruth.get(StrategyKind.PROBABILISTIC)
    if s2 is not None:
        print(f"  S2 hyper-truth rate {s2.pooled.rate:.3f} (simplex responses cannot exceed 1)")
    print(f"wrote {len(written)} files to {args.out_dir / 'tables'}")


if __name__ == "__main__":
    main()
