"""Assemble analysis tables from a dataset and write them as markdown / CSV."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .phenomena import PhenomenonClass
from .prompting import StrategyKind
from .records import Dataset, ExclusionReport
from .stats import (
    DESCRIPTIVE_COLUMNS,
    ChiSquareResult,
    DescriptiveRow,
    FisherResult,
    HypertruthTable,
    ShiftRow,
    chi_square_independence,
    correlation_matrix,
    descriptive_by_group,
    fisher_one_vs_rest,
    hypertruth_table,
    paired_columns,
    shift_table,
)
from .svns import is_hypertruth

FORMATS = ("md", "csv")


class EmptyDatasetError(ValueError):
    pass


@dataclass
class ReportBundle:
    run_ids: tuple[str, ...]
    exclusions: ExclusionReport | None
    descriptive: dict[tuple[StrategyKind, str], list[DescriptiveRow]] = field(default_factory=dict)
    hypertruth: dict[StrategyKind, HypertruthTable] = field(default_factory=dict)
    chi_square: ChiSquareResult | None = None
    fisher: dict[str, FisherResult] = field(default_factory=dict)
    shifts: list[ShiftRow] = field(default_factory=list)
    correlations: dict[tuple[str, str], float] = field(default_factory=dict)
    paired: dict[str, list[float]] = field(default_factory=dict)


def build_report(dataset: Dataset, exclusions: ExclusionReport | None = None) -> ReportBundle:
    if len(dataset) == 0:
        raise EmptyDatasetError("dataset contains no valid records")
    bundle = ReportBundle(run_ids=dataset.run_ids, exclusions=exclusions)
    strategies = [s for s in StrategyKind if dataset.select(s)]
    for s in strategies:
        bundle.descriptive[(s, "phenomenon")] = descriptive_by_group(dataset, s, "phenomenon")
        bundle.descriptive[(s, "model")] = descriptive_by_group(dataset, s, "model")
        bundle.hypertruth[s] = hypertruth_table(dataset, s)

    s1 = bundle.hypertruth.get(StrategyKind.NEUTROSOPHIC)
    if s1 is not None and len(s1.rows) >= 2:
        try:
            bundle.chi_square = chi_square_independence(s1.contingency())
        except ValueError:
            bundle.chi_square = None
        try:
            bundle.fisher = fisher_one_vs_rest(s1)
        except ValueError:
            bundle.fisher = {}
    if StrategyKind.NEUTROSOPHIC in strategies and StrategyKind.PROBABILISTIC in strategies:
        try:
            bundle.shifts = shift_table(dataset)
        except ValueError:
            bundle.shifts = []
        bundle.paired = paired_columns(dataset)
        if len(next(iter(bundle.paired.values()), [])) >= 2:
            bundle.correlations = correlation_matrix(bundle.paired)
    return bundle


# --- rendering -------------------------------------------------------------


def _label(group: str) -> str:
    try:
        return PhenomenonClass.parse(group).label
    except ValueError:
        return f"`{group}`"


def _md_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _signed(x: float) -> str:
    return f"{x:+.3f}"


def render_tables(bundle: ReportBundle) -> dict[str, dict[str, str]]:
    """Return ``{table_name: {format: text}}`` for every table in the bundle."""
    out: dict[str, dict[str, str]] = {}

    for (strategy, grouping), rows in bundle.descriptive.items():
        name = f"descriptive_{grouping}_{strategy.value}"
        head = ["Phenomenon" if grouping == "phenomenon" else "Model",
                "Truth (T)", "Indeterminacy (I)", "Falsity (F)", "Sum (T+I+F)"]
        md_rows = [
            [_label(r.group)] + [f"{r.means[c]:.3f} ± {r.sds[c]:.3f}" for c in DESCRIPTIVE_COLUMNS]
            for r in rows
        ]
        csv_head = ["group", "n"] + [f"{c}_{s}" for c in DESCRIPTIVE_COLUMNS for s in ("mean", "sd", "sd_pop")]
        csv_rows = [
            [r.group, r.n] + [v for c in DESCRIPTIVE_COLUMNS
                              for v in (r.means[c], r.sds[c], r.sds_population[c])]
            for r in rows
        ]
        out[name] = {"md": _md_table(head, md_rows), "csv": _csv(csv_head, csv_rows)}

    for strategy, table in bundle.hypertruth.items():
        name = f"hypertruth_{strategy.value}"
        md_rows = [[_label(r.group), str(r.k), str(r.n), f"{100 * r.rate:.1f}%"] for r in table.rows]
        p = table.pooled
        md_rows.append(["**Total**", f"**{p.k}**", f"**{p.n}**", f"**{100 * p.rate:.1f}%**"])
        md = _md_table(["Phenomenon", "Hyper-truth cases (k)", "Total (n)", "Rate (k/n)"], md_rows)
        w = table.wilson
        md += f"\nWilson {w.z:g}-z interval on pooled rate: [{w.low:.3f}, {w.high:.3f}]\n"
        csv_rows = [[r.group, r.k, r.n, r.rate] for r in table.rows]
        csv_rows.append(["Total", p.k, p.n, p.rate])
        out[name] = {"md": md, "csv": _csv(["group", "k", "n", "rate"], csv_rows)}
        out[f"wilson_{strategy.value}"] = {
            "csv": _csv(["k", "n", "z", "low", "high"], [[w.k, w.n, w.z, w.low, w.high]]),
        }

    tests_rows = []
    if bundle.chi_square is not None:
        c = bundle.chi_square
        tests_rows.append(["chi_square_phenomenon_x_hypertruth", "", c.statistic, c.df, c.p_value])
    for group, fr in bundle.fisher.items():
        tests_rows.append([f"fisher_one_vs_rest", group, fr.odds_ratio, "", fr.p_value])
    if tests_rows:
        md_rows = []
        for test, group, stat, df, p in tests_rows:
            label = "Pearson χ² (phenomenon × hyper-truth)" if not group else f"Fisher one-vs-rest: {_label(group)}"
            stat_s = "∞" if isinstance(stat, float) and math.isinf(stat) else f"{stat:.2f}"
            md_rows.append([label, stat_s, str(df), f"{p:.4f}"])
        out["tests_S1"] = {
            "md": _md_table(["Test", "Statistic / OR", "df", "p"], md_rows),
            "csv": _csv(["test", "group", "statistic", "df", "p_value"], tests_rows),
        }

    if bundle.shifts:
        md_rows = [
            [_label(r.phenomenon), f"{r.s1['T']:.3f}", f"{r.s2['T']:.3f}", _signed(r.delta["T"]),
             f"{r.s1['I']:.3f}", f"{r.s2['I']:.3f}", _signed(r.delta["I"])]
            for r in bundle.shifts
        ]
        csv_rows = [
            [r.phenomenon] + [d[c] for c in ("T", "I", "F") for d in (r.s1, r.s2, r.delta)]
            for r in bundle.shifts
        ]
        csv_head = ["phenomenon"] + [f"{src}_{c}" for c in ("T", "I", "F") for src in ("S1", "S2", "delta")]
        out["shifts"] = {
            "md": _md_table(["Phenomenon", "S1 T", "S2 T", "ΔT", "S1 I", "S2 I", "ΔI"], md_rows),
            "csv": _csv(csv_head, csv_rows),
        }

    if bundle.correlations:
        names = list(bundle.paired)
        md_rows = [[a] + [f"{bundle.correlations[(a, b)]:.2f}" for b in names] for a in names]
        csv_rows = [[a, b, bundle.correlations[(a, b)]] for a in names for b in names]
        out["correlations"] = {
            "md": _md_table([""] + names, md_rows),
            "csv": _csv(["x", "y", "r"], csv_rows),
        }

    if bundle.exclusions is not None:
        ex = bundle.exclusions
        rows = [[s, ex.gross_by_strategy.get(s, 0), ex.net_by_strategy.get(s, 0)]
                for s in sorted(ex.gross_by_strategy)]
        md = _md_table(["Strategy", "Gross", "Net"], [[str(v) for v in r] for r in rows])
        if ex.excluded:
            md += "\n" + _md_table(
                ["Line", "Model", "Phenomenon", "Strategy", "Rep", "Reason"],
                [[str(e.to_json()[k] if e.to_json()[k] is not None else "") for k in
                  ("line", "model_id", "phenomenon_class", "strategy", "repetition", "reason")]
                 for e in ex.excluded],
            )
        out["exclusions"] = {
            "md": md,
            "csv": _csv(["line", "model_id", "phenomenon_class", "strategy", "repetition", "reason"],
                        [list(e.to_json().values()) for e in ex.excluded]),
        }
    return out


def plot_data(dataset: Dataset, bundle: ReportBundle) -> dict[str, str]:
    """CSV sources for the component, sum, strategy and correlation figures."""
    recs = sorted(dataset.records, key=lambda r: (r.strategy.value, r.model_id, r.phenomenon_class.value, r.repetition))
    rows = [
        [r.strategy.value, r.model_id, r.phenomenon_class.value, r.repetition,
         r.triplet.t, r.triplet.i, r.triplet.f, r.triplet.total, int(is_hypertruth(r.triplet))]
        for r in recs
    ]
    out = {
        "plot_records": _csv(
            ["strategy", "model_id", "phenomenon_class", "repetition", "T", "I", "F", "Sum", "hypertruth"], rows
        ),
    }
    mean_rows = []
    for (strategy, grouping), drows in bundle.descriptive.items():
        if grouping != "phenomenon":
            continue
        for r in drows:
            mean_rows.append([strategy.value, r.group] + [r.means[c] for c in DESCRIPTIVE_COLUMNS])
    out["plot_strategy_means"] = _csv(["strategy", "phenomenon_class", "T", "I", "F", "Sum"], mean_rows)
    if bundle.paired:
        names = list(bundle.paired)
        n = len(bundle.paired[names[0]])
        out["plot_correlation_pairs"] = _csv(names, [[bundle.paired[c][i] for c in names] for i in range(n)])
    return out


def write_report(bundle: ReportBundle, dataset: Dataset, out_dir: str | Path,
                 formats: Sequence[str] = FORMATS) -> list[Path]:
    bad = set(formats) - set(FORMATS)
    if bad:
        raise ValueError(f"unknown formats {sorted(bad)}; choose from {FORMATS}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, by_fmt in render_tables(bundle).items():
        for fmt in formats:
            if fmt in by_fmt:
                path = out_dir / f"{name}.{fmt}"
                path.write_text(by_fmt[fmt], encoding="utf-8")
                written.append(path)
    if "csv" in formats:
        for name, text in plot_data(dataset, bundle).items():
            path = out_dir / f"{name}.csv"
            path.write_text(text, encoding="utf-8")
            written.append(path)
    return written
