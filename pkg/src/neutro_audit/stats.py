"""Statistics over evaluation datasets.

Everything here is plain-Python double precision: the chi-square tail comes
from a regularised incomplete gamma function and Fisher's test from exact
hypergeometric enumeration in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

from .phenomena import TABLE_ORDER, PhenomenonClass
from .prompting import StrategyKind
from .records import Dataset
from .svns import COMPONENTS, hypertruth_rate, is_hypertruth, strategy_shift

DESCRIPTIVE_COLUMNS = ("T", "I", "F", "Sum")


class EmptyGroupError(ValueError):
    pass


class DegenerateTableError(ValueError):
    pass


# --- basic moments ---------------------------------------------------------


def mean(xs: Sequence[float]) -> float:
    if not xs:
        raise ValueError("mean of empty sequence")
    return math.fsum(xs) / len(xs)


def std(xs: Sequence[float], ddof: int = 1) -> float:
    n = len(xs)
    if n - ddof <= 0:
        return 0.0 if n == 1 else math.nan
    m = mean(xs)
    return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / (n - ddof))


@dataclass(frozen=True)
class DescriptiveRow:
    group: str
    n: int
    means: dict[str, float]
    sds: dict[str, float]
    sds_population: dict[str, float] = field(default_factory=dict)

    def sd(self, column: str, ddof: int = 1) -> float:
        return self.sds[column] if ddof == 1 else self.sds_population[column]


def describe(group: str, triplets: Sequence) -> DescriptiveRow:
    if not triplets:
        raise EmptyGroupError(f"group {group!r} has no records")
    cols = {c: [t.component(c) for t in triplets] for c in DESCRIPTIVE_COLUMNS}
    return DescriptiveRow(
        group=group,
        n=len(triplets),
        means={c: mean(v) for c, v in cols.items()},
        sds={c: std(v, 1) for c, v in cols.items()},
        sds_population={c: std(v, 0) for c, v in cols.items()},
    )


def descriptive_by_group(
    dataset: Dataset,
    strategy: StrategyKind,
    grouping: Literal["phenomenon", "model"],
    groups: Iterable | None = None,
) -> list[DescriptiveRow]:
    """Mean and SD of T, I, F and their sum for each phenomenon or model."""
    if grouping == "phenomenon":
        keys = list(groups) if groups is not None else list(dataset.phenomena(strategy))
        return [describe(k.value, dataset.triplets(strategy, phenomenon=k)) for k in keys]
    if grouping == "model":
        keys = list(groups) if groups is not None else list(dataset.models(strategy))
        return [describe(k, dataset.triplets(strategy, model=k)) for k in keys]
    raise ValueError(f"grouping must be 'phenomenon' or 'model', got {grouping!r}")


# --- Wilson interval -------------------------------------------------------


@dataclass(frozen=True)
class WilsonInterval:
    k: int
    n: int
    z: float
    low: float
    high: float

    @property
    def estimate(self) -> float:
        return self.k / self.n


def wilson_interval(k: int, n: int, z: float = 1.96) -> WilsonInterval:
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not (0 <= k <= n):
        raise ValueError(f"k must lie in [0, n], got k={k}, n={n}")
    if not z > 0:
        raise ValueError(f"z must be positive, got {z}")
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    low, high = max(0.0, center - half), min(1.0, center + half)
    # Rounding can leave the bound a hair inside the estimate at k = 0 or n.
    return WilsonInterval(k, n, z, min(low, p), max(high, p))


# --- incomplete gamma / chi-square tail -------------------------------------

_EPS = 1e-15
_MAX_ITER = 10_000
_TINY = 1e-300


def _gamma_p_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction for Q(a, x).
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularised incomplete gamma ``Q(a, x) = Gamma(a, x) / Gamma(a)``."""
    if a <= 0:
        raise ValueError(f"shape a must be positive, got {a}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_p_series(a, x))
    return min(1.0, _gamma_q_contfrac(a, x))


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if df < 1:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    return regularized_gamma_q(df / 2.0, x / 2.0)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float
    expected: tuple[tuple[float, ...], ...] = ()


def chi_square_independence(counts: Sequence[Sequence[float]]) -> ChiSquareResult:
    """Pearson test of independence on an R x C table, no continuity correction."""
    rows = [list(map(float, r)) for r in counts]
    if len(rows) < 2 or any(len(r) != len(rows[0]) for r in rows) or len(rows[0]) < 2:
        raise ValueError("need a rectangular table with at least 2 rows and 2 columns")
    if any(v < 0 for r in rows for v in r):
        raise ValueError("counts must be non-negative")
    row_tot = [math.fsum(r) for r in rows]
    col_tot = [math.fsum(col) for col in zip(*rows)]
    total = math.fsum(row_tot)
    if any(t == 0 for t in row_tot) or any(t == 0 for t in col_tot):
        raise DegenerateTableError("table has a zero row or column marginal")
    expected = [[rt * ct / total for ct in col_tot] for rt in row_tot]
    stat = math.fsum(
        (o - e) ** 2 / e for ro, re in zip(rows, expected) for o, e in zip(ro, re)
    )
    df = (len(rows) - 1) * (len(rows[0]) - 1)
    return ChiSquareResult(stat, df, chi2_sf(stat, df), tuple(tuple(r) for r in expected))


# --- Fisher exact ----------------------------------------------------------

FISHER_REL_TOL = 1e-7


@dataclass(frozen=True)
class FisherResult:
    table: tuple[tuple[int, int], tuple[int, int]]
    odds_ratio: float
    p_value: float


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def hypergeom_logpmf(x: int, row1: int, row2: int, col1: int) -> float:
    """log P(top-left cell = x) for a 2x2 table with the given margins."""
    return _log_comb(row1, x) + _log_comb(row2, col1 - x) - _log_comb(row1 + row2, col1)


def fisher_exact(table: Sequence[Sequence[int]]) -> FisherResult:
    """Two-sided Fisher exact test on a 2x2 table.

    The p-value sums the probabilities of every table with the observed
    margins that is no more likely than the observed one (relative slack
    ``FISHER_REL_TOL``).
    """
    (a, b), (c, d) = table
    cells = (a, b, c, d)
    if any(int(v) != v or v < 0 for v in cells):
        raise ValueError("Fisher test needs non-negative integer counts")
    a, b, c, d = map(int, cells)
    row1, row2, col1 = a + b, c + d, a + c
    if row1 + row2 == 0:
        raise DegenerateTableError("table total is zero")
    if 0 in (row1, row2, col1, b + d):
        raise DegenerateTableError("table has a zero marginal")

    if b * c == 0:
        odds = math.inf if a * d > 0 else math.nan
    else:
        odds = (a * d) / (b * c)

    lo, hi = max(0, col1 - row2), min(row1, col1)
    logs = [hypergeom_logpmf(x, row1, row2, col1) for x in range(lo, hi + 1)]
    cutoff = logs[a - lo] + math.log1p(FISHER_REL_TOL)
    p = math.fsum(math.exp(lp) for lp in logs if lp <= cutoff)
    return FisherResult(((a, b), (c, d)), odds, min(1.0, p))


# --- correlation -----------------------------------------------------------


def pearson_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("correlation needs at least two pairs")
    mx, my = mean(x), mean(y)
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for a constant input")
    r = math.fsum(u * v for u, v in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# --- dataset-level tables --------------------------------------------------


@dataclass(frozen=True)
class HypertruthRow:
    group: str
    k: int
    n: int

    @property
    def rate(self) -> float:
        return self.k / self.n


@dataclass(frozen=True)
class HypertruthTable:
    strategy: StrategyKind
    rows: tuple[HypertruthRow, ...]
    pooled: HypertruthRow
    wilson: WilsonInterval

    def contingency(self) -> list[list[int]]:
        """Rows = phenomena, columns = (hyper-truth, not hyper-truth)."""
        return [[r.k, r.n - r.k] for r in self.rows]


def hypertruth_table(dataset: Dataset, strategy: StrategyKind, z: float = 1.96) -> HypertruthTable:
    all_trips = dataset.triplets(strategy)
    if not all_trips:
        raise EmptyGroupError(f"no valid {strategy.value} records")
    rows = []
    for cls in dataset.phenomena(strategy):
        hr = hypertruth_rate(dataset.triplets(strategy, phenomenon=cls))
        rows.append(HypertruthRow(cls.value, hr.k, hr.n))
    pooled = hypertruth_rate(all_trips)
    return HypertruthTable(
        strategy,
        tuple(rows),
        HypertruthRow("Total", pooled.k, pooled.n),
        wilson_interval(pooled.k, pooled.n, z),
    )


def fisher_one_vs_rest(table: HypertruthTable) -> dict[str, FisherResult]:
    """Each phenomenon's hyper-truth split against all other phenomena pooled."""
    out = {}
    for row in table.rows:
        rest_k = table.pooled.k - row.k
        rest_n = table.pooled.n - row.n
        out[row.group] = fisher_exact([[row.k, row.n - row.k], [rest_k, rest_n - rest_k]])
    return out


@dataclass(frozen=True)
class ShiftRow:
    phenomenon: str
    s1: dict[str, float]
    s2: dict[str, float]
    delta: dict[str, float]


def shift_table(dataset: Dataset) -> list[ShiftRow]:
    """Per-phenomenon S1 minus S2 mean for each of T, I, F."""
    s1, s2 = StrategyKind.NEUTROSOPHIC, StrategyKind.PROBABILISTIC
    rows = []
    phenomena = [c for c in TABLE_ORDER if c in dataset.phenomena(s1) or c in dataset.phenomena(s2)]
    if not phenomena:
        raise EmptyGroupError("dataset has no S1 or S2 records")
    for cls in phenomena:
        a = dataset.triplets(s1, phenomenon=cls)
        b = dataset.triplets(s2, phenomenon=cls)
        if not a or not b:
            missing = s1 if not a else s2
            raise EmptyGroupError(f"{cls.value}: no valid {missing.value} records for the shift")
        rows.append(ShiftRow(
            cls.value,
            s1={c: mean([t.component(c) for t in a]) for c in COMPONENTS},
            s2={c: mean([t.component(c) for t in b]) for c in COMPONENTS},
            delta={
                c: strategy_shift(c, [t.component(c) for t in a], [t.component(c) for t in b])
                for c in COMPONENTS
            },
        ))
    return rows


def paired_columns(dataset: Dataset) -> dict[str, list[float]]:
    """S1 and S2 component columns aligned on (model, phenomenon, repetition).

    Only tuples present under both strategies are kept, so cross-strategy
    correlations compare like with like.
    """
    s1 = {(r.model_id, r.phenomenon_class, r.repetition): r.triplet
          for r in dataset.select(StrategyKind.NEUTROSOPHIC)}
    s2 = {(r.model_id, r.phenomenon_class, r.repetition): r.triplet
          for r in dataset.select(StrategyKind.PROBABILISTIC)}
    keys = sorted(set(s1) & set(s2), key=lambda k: (k[0], k[1].value, k[2]))
    cols: dict[str, list[float]] = {}
    for tag, src in (("S1", s1), ("S2", s2)):
        for c in DESCRIPTIVE_COLUMNS:
            cols[f"{tag}_{c}"] = [src[k].component(c) for k in keys]
    return cols


def correlation_matrix(columns: dict[str, Sequence[float]]) -> dict[tuple[str, str], float]:
    names = list(columns)
    out = {}
    for a in names:
        for b in names:
            try:
                out[(a, b)] = pearson_correlation(columns[a], columns[b])
            except ValueError:
                out[(a, b)] = math.nan
    return out


__all__ = [
    "DescriptiveRow", "WilsonInterval", "ChiSquareResult", "FisherResult",
    "HypertruthRow", "HypertruthTable", "ShiftRow",
    "descriptive_by_group", "wilson_interval", "chi_square_independence", "chi2_sf",
    "regularized_gamma_q", "fisher_exact", "fisher_one_vs_rest", "pearson_correlation",
    "shift_table", "hypertruth_table", "paired_columns", "correlation_matrix",
    "is_hypertruth",
]
