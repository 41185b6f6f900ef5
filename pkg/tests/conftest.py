from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from neutro_audit.phenomena import PhenomenonClass as P
from neutro_audit.prompting import StrategyKind as S, parse_response
from neutro_audit.records import EvaluationRecord

MODELS = ("gpt-3.5-turbo", "gpt-4-turbo", "gpt-4o", "gpt-4o-mini")

# Hyper-truth counts out of 20 per phenomenon under S1.
HYPER_COUNTS = {
    P.FUTURE_CONTINGENCY: 14,
    P.ETHICAL_CONTRADICTION: 19,
    P.EPISTEMIC_IGNORANCE: 11,
    P.LOGICAL_PARADOX: 10,
    P.VAGUENESS: 12,
}

ACCEPTANCE_LINES: list[str] = []


def make_record(strategy, model, cls, rep, values=None, raw=None, run_id="synthetic"):
    strategy = S(strategy)
    raw = raw if raw is not None else json.dumps(values)
    return EvaluationRecord(
        run_id=run_id,
        model_id=model,
        phenomenon_class=cls,
        strategy=strategy,
        repetition=rep,
        timestamp="2026-04-30T00:00:00Z",
        raw_text=raw,
        parsed=parse_response(strategy, raw),
    )


def hyper_count_records(counts=HYPER_COUNTS, run_id="synthetic"):
    """S1 and S2 records over 4 models x 5 reps with fixed S1 hyper-truth counts."""
    out = []
    for cls, k in counts.items():
        slot = 0
        for model in MODELS:
            for rep in range(1, 6):
                hyper = slot < k
                slot += 1
                s1 = {"T": 0.5, "I": 0.3, "F": 0.3} if hyper else {"T": 0.3, "I": 0.3, "F": 0.3}
                out.append(make_record(S.NEUTROSOPHIC, model, cls, rep, s1, run_id=run_id))
                out.append(make_record(S.PROBABILISTIC, model, cls, rep,
                                       {"T": 0.2 + 0.01 * rep, "I": 0.5, "F": round(0.3 - 0.01 * rep, 2)},
                                       run_id=run_id))
    return out


def write_jsonl(path: Path, records) -> Path:
    path.write_text("".join(r.to_line() for r in records), encoding="utf-8")
    return path


@pytest.fixture
def hyper_records():
    return hyper_count_records()


@pytest.fixture
def acceptance_log():
    def log(criterion: int, status: str, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"criterion {criterion:>2}: {status:<7} {detail}")
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
