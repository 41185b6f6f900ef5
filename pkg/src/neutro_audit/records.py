"""Record files, validation, and the in-memory dataset the statistics run on."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from .phenomena import PhenomenonClass
from .prompting import (
    MALFORMED,
    NON_NUMERIC,
    RANGE_VIOLATION,
    MISSING_FIELD,
    ParsedResponse,
    StrategyKind,
    parse_response,
)
from .svns import DomainError, Triplet, derive_strategy3_triplet

RECORD_FIELDS = (
    "run_id", "model_id", "phenomenon_class", "strategy",
    "repetition", "timestamp", "raw_text", "parsed",
)
FORMAT_ERROR = "format_error"
DUPLICATE = "duplicate"


class RecordFormatError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class EvaluationRecord:
    run_id: str
    model_id: str
    phenomenon_class: PhenomenonClass
    strategy: StrategyKind
    repetition: int
    timestamp: str
    raw_text: str
    parsed: ParsedResponse

    def __post_init__(self) -> None:
        if self.repetition < 1:
            raise ValueError("repetition indices start at 1")
        if self.parsed.valid and self.parsed.triplet is None:
            raise ValueError("a valid record must carry a triplet")

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.model_id, self.phenomenon_class.value, self.strategy.value, self.repetition)

    @property
    def triplet(self) -> Triplet:
        if self.parsed.triplet is None:
            raise ValueError(f"record {self.key} has no triplet")
        return self.parsed.triplet

    def to_json(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "model_id": self.model_id,
            "phenomenon_class": self.phenomenon_class.value,
            "strategy": self.strategy.value,
            "repetition": self.repetition,
            "timestamp": self.timestamp,
            "raw_text": self.raw_text,
            "parsed": self.parsed.to_json(),
        }

    def to_line(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "EvaluationRecord":
        missing = [k for k in RECORD_FIELDS if k not in obj]
        if missing:
            raise ValueError(f"missing fields {missing}")
        return cls(
            run_id=str(obj["run_id"]),
            model_id=str(obj["model_id"]),
            phenomenon_class=PhenomenonClass.parse(obj["phenomenon_class"]),
            strategy=StrategyKind.parse(obj["strategy"]),
            repetition=int(obj["repetition"]),
            timestamp=str(obj["timestamp"]),
            raw_text=obj["raw_text"] if isinstance(obj["raw_text"], str) else "",
            parsed=ParsedResponse.from_json(obj["parsed"]),
        )


def iter_record_lines(path: str | Path) -> Iterator[tuple[int, EvaluationRecord | RecordFormatError]]:
    """Yield ``(line_no, record)`` or ``(line_no, error)``; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield n, EvaluationRecord.from_json(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                yield n, RecordFormatError(n, str(exc))


def read_records(path: str | Path) -> tuple[list[EvaluationRecord], list[RecordFormatError]]:
    records, errors = [], []
    for _, item in iter_record_lines(path):
        (errors if isinstance(item, RecordFormatError) else records).append(item)
    return records, errors


# --- validation ------------------------------------------------------------


@dataclass(frozen=True)
class Exclusion:
    reason: str
    line: int | None = None
    record: EvaluationRecord | None = None

    @property
    def code(self) -> str:
        return self.reason.split(":", 1)[0]

    def to_json(self) -> dict[str, Any]:
        rec = self.record
        return {
            "line": self.line,
            "model_id": rec.model_id if rec else None,
            "phenomenon_class": rec.phenomenon_class.value if rec else None,
            "strategy": rec.strategy.value if rec else None,
            "repetition": rec.repetition if rec else None,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class ExclusionReport:
    excluded: tuple[Exclusion, ...]
    gross: int
    gross_by_strategy: dict[str, int]
    net_by_strategy: dict[str, int]

    @property
    def net(self) -> int:
        return self.gross - len(self.excluded)

    def reasons(self) -> Counter:
        return Counter(e.code for e in self.excluded)


def _revalidate(rec: EvaluationRecord) -> ParsedResponse:
    """Decide a record's validity from its raw text when present."""
    stored = rec.parsed
    if not stored.valid:
        return stored
    if rec.raw_text.strip():
        return parse_response(rec.strategy, rec.raw_text)
    # No raw text: trust the stored numbers only after re-checking their range.
    try:
        if rec.strategy is StrategyKind.ENTROPY_DERIVED and stored.p_yes is not None:
            trip = derive_strategy3_triplet(stored.p_yes, stored.p_no, tol=math.inf)
            return ParsedResponse(rec.strategy, True, trip, stored.p_yes, stored.p_no,
                                  stored.sum_deviation)
        if stored.triplet is None:
            return ParsedResponse.failure(rec.strategy, MISSING_FIELD, "no triplet")
        return stored
    except (DomainError, TypeError) as exc:
        return ParsedResponse.failure(rec.strategy, RANGE_VIOLATION, str(exc))


@dataclass(frozen=True)
class Dataset:
    """Valid records grouped by (strategy, model, phenomenon) cell."""

    records: tuple[EvaluationRecord, ...] = ()
    cells: dict[tuple[StrategyKind, str, PhenomenonClass], tuple[EvaluationRecord, ...]] = field(
        default_factory=dict, compare=False
    )

    @classmethod
    def from_records(cls, records: Iterable[EvaluationRecord]) -> "Dataset":
        recs = tuple(records)
        grouped: dict = defaultdict(list)
        for r in recs:
            grouped[(r.strategy, r.model_id, r.phenomenon_class)].append(r)
        return cls(recs, {k: tuple(v) for k, v in grouped.items()})

    def __len__(self) -> int:
        return len(self.records)

    @property
    def run_ids(self) -> tuple[str, ...]:
        return tuple(sorted({r.run_id for r in self.records}))

    def models(self, strategy: StrategyKind | None = None) -> tuple[str, ...]:
        return tuple(sorted({r.model_id for r in self.select(strategy)}))

    def phenomena(self, strategy: StrategyKind | None = None) -> tuple[PhenomenonClass, ...]:
        present = {r.phenomenon_class for r in self.select(strategy)}
        from .phenomena import TABLE_ORDER

        return tuple(c for c in TABLE_ORDER if c in present)

    def select(
        self,
        strategy: StrategyKind | None = None,
        model: str | None = None,
        phenomenon: PhenomenonClass | None = None,
    ) -> list[EvaluationRecord]:
        return [
            r for r in self.records
            if (strategy is None or r.strategy is strategy)
            and (model is None or r.model_id == model)
            and (phenomenon is None or r.phenomenon_class is phenomenon)
        ]

    def triplets(self, strategy: StrategyKind, **kw) -> list[Triplet]:
        return [r.triplet for r in self.select(strategy, **kw)]


def validate_and_filter(
    source: str | Path | Sequence[EvaluationRecord],
) -> tuple[Dataset, ExclusionReport]:
    """Split records into the valid dataset and an exclusion report.

    A path is read line by line; corrupt lines are reported with their line
    number and do not stop the rest of the file from being processed.
    """
    if isinstance(source, (str, Path)):
        items = list(iter_record_lines(source))
    else:
        items = [(None, r) for r in source]

    valid: list[EvaluationRecord] = []
    excluded: list[Exclusion] = []
    gross_by: Counter = Counter()
    seen: set = set()
    for line, item in items:
        if isinstance(item, RecordFormatError):
            excluded.append(Exclusion(f"{FORMAT_ERROR}: {item.message}", line=item.line))
            continue
        gross_by[item.strategy.value] += 1
        uid = (item.run_id, *item.key)
        if uid in seen:
            excluded.append(Exclusion(f"{DUPLICATE}: {uid}", line=line, record=item))
            continue
        seen.add(uid)
        parsed = _revalidate(item)
        if parsed.valid:
            if parsed != item.parsed:
                item = EvaluationRecord(**{**item.__dict__, "parsed": parsed})
            valid.append(item)
        else:
            excluded.append(Exclusion(parsed.failure_reason or "invalid", line=line, record=item))

    net_by = Counter(r.strategy.value for r in valid)
    report = ExclusionReport(
        excluded=tuple(excluded),
        gross=len(items),
        gross_by_strategy=dict(sorted(gross_by.items())),
        net_by_strategy={k: net_by.get(k, 0) for k in sorted(gross_by)},
    )
    return Dataset.from_records(valid), report


# --- foreign (flat) record formats -----------------------------------------

_COLUMN_ALIASES = {
    "model_id": ("model_id", "model", "evaluator"),
    "phenomenon_class": ("phenomenon_class", "phenomenon", "category", "class", "phenomenon_type"),
    "strategy": ("strategy", "strategy_id", "prompt_strategy", "condition"),
    "repetition": ("repetition", "rep", "repeat", "replicate", "trial"),
    "raw_text": ("raw_text", "raw", "raw_response", "response"),
    "T": ("t", "truth"),
    "I": ("i", "indeterminacy"),
    "F": ("f", "falsity"),
    "P_yes": ("p_yes", "pyes"),
    "P_no": ("p_no", "pno"),
    "timestamp": ("timestamp", "time", "created_at"),
}


def _canon_columns(row: dict[str, Any]) -> dict[str, Any]:
    lower = {str(k).strip().lower(): v for k, v in row.items()}
    out = {}
    for canon, aliases in _COLUMN_ALIASES.items():
        for a in aliases:
            if a in lower and lower[a] not in (None, ""):
                out[canon] = lower[a]
                break
    return out


def _num(value: Any) -> Any:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _flat_to_record(row: dict[str, Any], repetition: int, run_id: str) -> EvaluationRecord:
    c = _canon_columns(row)
    strategy = StrategyKind.parse(c["strategy"])
    fields = strategy.fields
    if strategy is StrategyKind.ENTROPY_DERIVED and "P_yes" not in c and "T" in c:
        # Only the derived triplet was stored; recover the probabilities from it.
        c["P_yes"], c["P_no"] = c["T"], c["F"]
    values = {k: _num(c[k]) for k in fields if k in c}
    raw = c.get("raw_text") or ""
    if len(values) == len(fields):
        parsed = parse_response(strategy, json.dumps(values))
    elif raw:
        parsed = parse_response(strategy, raw)
    else:
        missing = [k for k in fields if k not in values]
        parsed = ParsedResponse.failure(strategy, MISSING_FIELD, ",".join(missing))
    rep = c.get("repetition")
    return EvaluationRecord(
        run_id=run_id,
        model_id=str(c["model_id"]),
        phenomenon_class=PhenomenonClass.parse(str(c["phenomenon_class"])),
        strategy=strategy,
        repetition=int(float(rep)) if rep is not None else repetition,
        timestamp=str(c.get("timestamp", "")),
        raw_text=raw if isinstance(raw, str) else json.dumps(raw),
        parsed=parsed,
    )


def load_any(path: str | Path) -> list[EvaluationRecord]:
    """Read our JSONL format, or a flat CSV / JSON / JSONL table of evaluations.

    Flat rows need model, phenomenon and strategy columns plus either the
    numeric fields (``T, I, F`` or ``P_yes, P_no``) or the raw reply text.
    For the entropy-derived strategy raw probabilities are preferred and the
    entropy is always recomputed.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    rows: list[dict[str, Any]]
    if path.suffix.lower() == ".csv":
        rows = list(csv.DictReader(text.splitlines()))
    else:
        stripped = text.lstrip()
        if stripped.startswith("["):
            rows = json.loads(stripped)
        else:
            rows = [json.loads(line) for line in text.splitlines() if line.strip()]
            if rows and all(k in rows[0] for k in RECORD_FIELDS):
                return [EvaluationRecord.from_json(r) for r in rows]
    if isinstance(rows, dict):
        rows = rows.get("records") or rows.get("data") or []
    run_id = path.stem
    counters: Counter = Counter()
    out = []
    for row in rows:
        c = _canon_columns(row)
        try:
            group = (str(c["model_id"]), str(c["phenomenon_class"]), str(c["strategy"]))
        except KeyError as exc:
            raise RecordFormatError(len(out) + 1, f"missing column {exc}") from None
        counters[group] += 1
        out.append(_flat_to_record(row, counters[group], run_id))
    return out


__all__ = [
    "EvaluationRecord", "Dataset", "Exclusion", "ExclusionReport", "RecordFormatError",
    "read_records", "validate_and_filter", "load_any", "iter_record_lines",
    "MALFORMED", "NON_NUMERIC", "RANGE_VIOLATION",
]
