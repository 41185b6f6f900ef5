"""The stimulus bank: one canonical statement per phenomenon class."""

from __future__ import annotations

import datetime as dt
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence


class PhenomenonClass(str, enum.Enum):
    LOGICAL_PARADOX = "LogicalParadox"
    EPISTEMIC_IGNORANCE = "EpistemicIgnorance"
    VAGUENESS = "Vagueness"
    ETHICAL_CONTRADICTION = "EthicalContradiction"
    FUTURE_CONTINGENCY = "FutureContingency"

    @property
    def label(self) -> str:
        """Table label, e.g. ``"Paradox (Logical)"``."""
        return _LABELS[self]

    @classmethod
    def parse(cls, text: "str | PhenomenonClass") -> "PhenomenonClass":
        """Accept the identifier, the table label, or a loose spelling."""
        if isinstance(text, cls):
            return text
        key = _normalise(text)
        try:
            return _ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown phenomenon class {text!r}") from None


_LABELS = {
    PhenomenonClass.FUTURE_CONTINGENCY: "Contingency (Future)",
    PhenomenonClass.ETHICAL_CONTRADICTION: "Contradiction (Ethical)",
    PhenomenonClass.EPISTEMIC_IGNORANCE: "Ignorance (Epistemic)",
    PhenomenonClass.LOGICAL_PARADOX: "Paradox (Logical)",
    PhenomenonClass.VAGUENESS: "Vagueness (Fuzzy)",
}


def _normalise(text: str) -> str:
    return "".join(ch for ch in text.lower() if ch.isalnum())


_ALIASES: dict[str, PhenomenonClass] = {}
for _cls in PhenomenonClass:
    for _alias in (_cls.value, _cls.name, _LABELS[_cls]):
        _ALIASES[_normalise(_alias)] = _cls
for _alias, _cls in {
    "paradox": PhenomenonClass.LOGICAL_PARADOX,
    "liar": PhenomenonClass.LOGICAL_PARADOX,
    "ignorance": PhenomenonClass.EPISTEMIC_IGNORANCE,
    "fuzzy": PhenomenonClass.VAGUENESS,
    "vague": PhenomenonClass.VAGUENESS,
    "ethical": PhenomenonClass.ETHICAL_CONTRADICTION,
    "ethics": PhenomenonClass.ETHICAL_CONTRADICTION,
    "contradiction": PhenomenonClass.ETHICAL_CONTRADICTION,
    "contingency": PhenomenonClass.FUTURE_CONTINGENCY,
    "future": PhenomenonClass.FUTURE_CONTINGENCY,
}.items():
    _ALIASES[_alias] = _cls

#: Table ordering used throughout the reports (alphabetical by label).
TABLE_ORDER: tuple[PhenomenonClass, ...] = tuple(
    sorted(PhenomenonClass, key=lambda c: _LABELS[c])
)


@dataclass(frozen=True)
class Phenomenon:
    cls: PhenomenonClass
    statement: str
    date_anchor: dt.date | None = None
    note: str = ""

    def __post_init__(self) -> None:
        if not self.statement.strip():
            raise ValueError("phenomenon statement must be non-empty")
        contingent = self.cls is PhenomenonClass.FUTURE_CONTINGENCY
        if contingent and self.date_anchor is None:
            raise ValueError("a future-contingency stimulus needs a date anchor")
        if not contingent and self.date_anchor is not None:
            raise ValueError(f"{self.cls.value} stimulus must not carry a date anchor")

    def to_json(self) -> dict:
        return {
            "class": self.cls.value,
            "statement": self.statement,
            "date_anchor": self.date_anchor.isoformat() if self.date_anchor else None,
            "note": self.note,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Phenomenon":
        anchor = obj.get("date_anchor")
        return cls(
            cls=PhenomenonClass.parse(obj["class"]),
            statement=obj["statement"],
            date_anchor=dt.date.fromisoformat(anchor) if anchor else None,
            note=obj.get("note") or "",
        )


#: The date "tomorrow" referred to in the original collection run.
DEFAULT_ANCHOR = dt.date(2026, 5, 1)

_DEFAULT_BANK = (
    Phenomenon(
        PhenomenonClass.LOGICAL_PARADOX,
        "This sentence is false.",
        note="high I, non-trivial T and F simultaneously; very high hyper-truth rate",
    ),
    Phenomenon(
        PhenomenonClass.EPISTEMIC_IGNORANCE,
        "The number of stars in the universe is even.",
        note="very high I, moderate F, low T; moderate hyper-truth rate",
    ),
    Phenomenon(
        PhenomenonClass.VAGUENESS,
        "John is 1.75 meters tall, therefore John is tall.",
        note="high T, moderate I; moderate hyper-truth rate",
    ),
    Phenomenon(
        PhenomenonClass.ETHICAL_CONTRADICTION,
        "Lying to save an innocent life is morally right and wrong at the same time.",
        note="high T and high F simultaneously; highest hyper-truth rate",
    ),
    Phenomenon(
        PhenomenonClass.FUTURE_CONTINGENCY,
        "It will rain in New York tomorrow.",
        date_anchor=DEFAULT_ANCHOR,
        note="moderate T, high I, moderate F; high hyper-truth rate",
    ),
)


class Bank(tuple):
    """An ordered, immutable stimulus collection indexable by class."""

    def __new__(cls, items: Iterable[Phenomenon]) -> "Bank":
        return super().__new__(cls, tuple(items))

    def __getitem__(self, key):  # type: ignore[override]
        if isinstance(key, PhenomenonClass):
            for p in self:
                if p.cls is key:
                    return p
            raise KeyError(key)
        return super().__getitem__(key)

    @property
    def classes(self) -> tuple[PhenomenonClass, ...]:
        return tuple(p.cls for p in self)


def default_bank() -> Bank:
    return Bank(_DEFAULT_BANK)


def anchor_statement(p: Phenomenon, run_date: dt.date | None = None) -> str:
    """Fix the referent of a future-contingency stimulus to an explicit date.

    ``"tomorrow"`` is replaced by the ISO anchor date; if the statement has no
    relative day word the date is appended. The stimulus's own anchor wins;
    ``run_date + 1 day`` is used only when the stimulus carries none. Other
    classes are returned unchanged.
    """
    if p.cls is not PhenomenonClass.FUTURE_CONTINGENCY:
        return p.statement
    anchor = p.date_anchor
    if anchor is None:
        if run_date is None:
            raise ValueError("contingency stimulus without anchor needs a run date")
        anchor = run_date + dt.timedelta(days=1)
    on_date = f"on {anchor.isoformat()}"
    statement = p.statement
    if anchor.isoformat() in statement:
        return statement
    for word in ("tomorrow", "today"):
        idx = statement.lower().find(word)
        if idx >= 0:
            return statement[:idx] + on_date + statement[idx + len(word):]
    body = statement.rstrip()
    end = body[-1] if body[-1] in ".!?" else ""
    return f"{body[: len(body) - len(end)]} {on_date}{end}"


def load_bank(path: str | Path) -> Bank:
    """Read a stimulus file (a JSON array of phenomenon objects)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError(f"{path}: stimulus file must hold a JSON array")
    return Bank(Phenomenon.from_json(obj) for obj in data)


def dump_bank(bank: Sequence[Phenomenon]) -> str:
    return json.dumps([p.to_json() for p in bank], indent=2, ensure_ascii=False) + "\n"
