"""Prompt templates for the three elicitation strategies and response parsing.

The template texts are frozen verbatim (a test pins their digest);
``{statement}`` is the only substitution slot.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass
from typing import Any

from .svns import Triplet, derive_strategy3_triplet


class StrategyKind(str, enum.Enum):
    NEUTROSOPHIC = "S1"
    PROBABILISTIC = "S2"
    ENTROPY_DERIVED = "S3"

    @property
    def fields(self) -> tuple[str, ...]:
        return ("P_yes", "P_no") if self is StrategyKind.ENTROPY_DERIVED else ("T", "I", "F")

    @classmethod
    def parse(cls, text: "str | StrategyKind") -> "StrategyKind":
        if isinstance(text, cls):
            return text
        key = re.sub(r"[^a-z0-9]", "", str(text).lower())
        for kind, aliases in _STRATEGY_ALIASES.items():
            if key in aliases:
                return kind
        raise ValueError(f"unknown strategy {text!r}")


_STRATEGY_ALIASES = {
    StrategyKind.NEUTROSOPHIC: {"s1", "1", "strategy1", "neutrosophic", "neutrosophics1"},
    StrategyKind.PROBABILISTIC: {"s2", "2", "strategy2", "probabilistic", "probabilistics2"},
    StrategyKind.ENTROPY_DERIVED: {
        "s3", "3", "strategy3", "entropy", "entropyderived", "entropyderiveds3",
    },
}

SLOT = "{statement}"

_S1_SYSTEM = (
    "You are an expert in Neutrosophic Logic. You evaluate statements using three "
    "INDEPENDENT dimensions: Truth (T), Indeterminacy (I), and Falsity (F), each on "
    "[0.0, 1.0]. These dimensions are NOT constrained to sum to 1.0. A statement can be "
    "simultaneously partially true AND partially false AND partially indeterminate. "
    "Respond with ONLY a JSON object, no other text."
)
_S1_USER = (
    "Evaluate this statement on three independent dimensions: Statement: {statement} "
    "— Truth (T): To what degree is this statement true? [0.0 to 1.0]; "
    "Indeterminacy (I): To what degree is the truth value unknown, undetermined, or "
    "inherently uncertain? [0.0 to 1.0]; Falsity (F): To what degree is this statement "
    "false? [0.0 to 1.0]. T, I, and F are independent. They need NOT sum to 1.0. "
    'Respond with ONLY: {"T": <value>, "I": <value>, "F": <value>}.'
)
_S2_SYSTEM = (
    "You are a probabilistic classifier. You assign probabilities to three mutually "
    "exclusive categories that MUST sum to exactly 1.0. Respond with ONLY a JSON object, "
    "no other text."
)
_S2_USER = (
    "Classify this statement into three mutually exclusive categories whose "
    "probabilities sum to 1.0: Statement: {statement} — T (True): Probability the "
    "statement is true; I (Uncertain): Probability the truth value is unknown or "
    "undetermined; F (False): Probability the statement is false. CONSTRAINT: "
    'T + I + F must equal 1.0. Respond with ONLY: {"T": <value>, "I": <value>, "F": <value>}.'
)
_S3_SYSTEM = (
    "You are a binary truth estimator. You estimate the probability that a statement is "
    "true (YES) versus false (NO). The two probabilities must sum to 1.0. Respond with "
    "ONLY a JSON object, no other text."
)
_S3_USER = (
    "Estimate the probability that this statement is true versus false: Statement: "
    "{statement} — P_yes: Probability the statement is true, in the closed interval "
    "[0.0, 1.0]; P_no: Probability the statement is false, in the closed interval "
    "[0.0, 1.0]. CONSTRAINT: P_yes + P_no must equal 1.0. Respond with ONLY: "
    '{"P_yes": <value>, "P_no": <value>}.'
)

TEMPLATES: dict[StrategyKind, tuple[str, str]] = {
    StrategyKind.NEUTROSOPHIC: (_S1_SYSTEM, _S1_USER),
    StrategyKind.PROBABILISTIC: (_S2_SYSTEM, _S2_USER),
    StrategyKind.ENTROPY_DERIVED: (_S3_SYSTEM, _S3_USER),
}


@dataclass(frozen=True)
class PromptPair:
    system: str
    user: str


def render_prompt(strategy: StrategyKind, statement: str) -> PromptPair:
    if not statement.strip():
        raise ValueError("statement must be non-empty")
    system, user = TEMPLATES[StrategyKind(strategy)]
    # str.format would trip over the JSON braces in the templates.
    return PromptPair(system=system, user=user.replace(SLOT, statement, 1))


# --- parsing ---------------------------------------------------------------

MALFORMED = "malformed_json"
MISSING_FIELD = "missing_field"
NON_NUMERIC = "non_numeric"
RANGE_VIOLATION = "range_violation"
BACKEND_ERROR = "backend_error"

# Guards keep parsing linear-ish on adversarial input.
MAX_RESPONSE_CHARS = 100_000
MAX_CANDIDATES = 64

_FENCE = re.compile(r"```(?:json|JSON)?\s*(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class ParsedResponse:
    strategy: StrategyKind
    valid: bool
    triplet: Triplet | None = None
    p_yes: float | None = None
    p_no: float | None = None
    sum_deviation: float | None = None
    failure_reason: str | None = None

    @property
    def failure_code(self) -> str | None:
        if self.failure_reason is None:
            return None
        return self.failure_reason.split(":", 1)[0]

    def to_json(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy.value,
            "valid": self.valid,
            "triplet": self.triplet.to_json() if self.triplet else None,
            "p_yes": self.p_yes,
            "p_no": self.p_no,
            "sum_deviation": self.sum_deviation,
            "failure_reason": self.failure_reason,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ParsedResponse":
        trip = obj.get("triplet")
        return cls(
            strategy=StrategyKind(obj["strategy"]),
            valid=bool(obj["valid"]),
            triplet=Triplet.from_json(trip) if trip else None,
            p_yes=obj.get("p_yes"),
            p_no=obj.get("p_no"),
            sum_deviation=obj.get("sum_deviation"),
            failure_reason=obj.get("failure_reason"),
        )

    @classmethod
    def failure(cls, strategy: StrategyKind, code: str, detail: str = "") -> "ParsedResponse":
        reason = f"{code}: {detail}" if detail else code
        return cls(strategy=strategy, valid=False, failure_reason=reason)


def _reject_constant(name: str) -> float:
    raise ValueError(f"non-finite constant {name}")


_decoder = json.JSONDecoder(parse_constant=_reject_constant)


def extract_json_object(raw: str) -> dict | None:
    """Find the first JSON object in ``raw``, tolerating fences and prose."""
    text = raw.strip()
    if not text:
        return None
    candidates = [m.group(1).strip() for m in _FENCE.finditer(text)]
    candidates.append(text)
    for chunk in candidates:
        try:
            obj = _decoder.decode(chunk)
        except ValueError:
            obj = None
        if isinstance(obj, dict):
            return obj
        start, tries = chunk.find("{"), 0
        while start >= 0 and tries < MAX_CANDIDATES:
            tries += 1
            try:
                obj, _ = _decoder.raw_decode(chunk, start)
            except ValueError:
                obj = None
            if isinstance(obj, dict):
                return obj
            start = chunk.find("{", start + 1)
    return None


def _numeric(obj: dict, name: str) -> float | str:
    """Return the field as float, or a failure string."""
    if name not in obj:
        return f"{MISSING_FIELD}: {name}"
    value = obj[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return f"{NON_NUMERIC}: {name}={value!r}"
    value = float(value)
    if not math.isfinite(value):
        return f"{NON_NUMERIC}: {name}={value!r}"
    if not (0.0 <= value <= 1.0):
        return f"{RANGE_VIOLATION}: {name}={value!r} outside [0, 1]"
    return value


def parse_response(strategy: StrategyKind, raw: str) -> ParsedResponse:
    """Parse and validate one model reply. Never raises on bad input."""
    strategy = StrategyKind(strategy)
    if not isinstance(raw, str):
        return ParsedResponse.failure(strategy, MALFORMED, "response is not text")
    if len(raw) > MAX_RESPONSE_CHARS:
        return ParsedResponse.failure(strategy, MALFORMED, f"response longer than {MAX_RESPONSE_CHARS} chars")
    obj = extract_json_object(raw)
    if obj is None:
        return ParsedResponse.failure(strategy, MALFORMED, "no JSON object found")
    values: dict[str, float] = {}
    for name in strategy.fields:
        got = _numeric(obj, name)
        if isinstance(got, str):
            return ParsedResponse(strategy=strategy, valid=False, failure_reason=got)
        values[name] = got

    if strategy is StrategyKind.ENTROPY_DERIVED:
        p_yes, p_no = values["P_yes"], values["P_no"]
        return ParsedResponse(
            strategy=strategy,
            valid=True,
            triplet=derive_strategy3_triplet(p_yes, p_no, tol=math.inf),
            p_yes=p_yes,
            p_no=p_no,
            sum_deviation=abs(math.fsum((p_yes, p_no)) - 1.0),
        )
    triplet = Triplet(values["T"], values["I"], values["F"])
    deviation = None
    if strategy is StrategyKind.PROBABILISTIC:
        deviation = abs(triplet.total - 1.0)
    return ParsedResponse(strategy=strategy, valid=True, triplet=triplet, sum_deviation=deviation)


def canonical_response(parsed: ParsedResponse) -> str:
    """Serialise a valid parse back to the wire shape the prompts request."""
    if not parsed.valid:
        raise ValueError("only valid responses have a canonical form")
    if parsed.strategy is StrategyKind.ENTROPY_DERIVED:
        return json.dumps({"P_yes": parsed.p_yes, "P_no": parsed.p_no})
    assert parsed.triplet is not None
    return json.dumps(parsed.triplet.to_json())
