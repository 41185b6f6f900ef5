"""Single-valued neutrosophic triplets and the quantities derived from them.

A triplet ``(t, i, f)`` carries independent truth, indeterminacy and falsity
degrees in ``[0, 1]``; nothing ties their sum to 1, so it ranges over
``[0, 3]``. Probabilistic (simplex) triplets are the special case where the
sum is pinned to exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import fmean
from typing import Callable, Iterable, Mapping, Sequence

#: Tolerance on ``|t + i + f - 1|`` for simplex triplets built in code.
SIMPLEX_EXACT_TOL = 1e-9
#: Tolerance for simplex triplets read from model output (two-decimal values).
SIMPLEX_API_TOL = 0.01
#: Tolerance on ``|p_yes + p_no - 1|`` for entropy-derived triplets.
BINARY_PAIR_TOL = 0.01

COMPONENTS = ("T", "I", "F")


class DomainError(ValueError):
    """A value lies outside the domain an operation is defined on."""


class ConstraintViolation(ValueError):
    """A normalisation constraint (simplex or binary pair) is not met."""


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name}={value!r} is outside [0, 1]")


@dataclass(frozen=True)
class Triplet:
    t: float
    i: float
    f: float

    def __post_init__(self) -> None:
        for name in ("t", "i", "f"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            if math.isnan(value):
                raise DomainError(f"{name} is NaN")
            _check_unit(name, value)
            object.__setattr__(self, name, float(value))

    @property
    def total(self) -> float:
        return scalar_projection(self)

    def component(self, name: str) -> float:
        """Return the component named ``"T"``, ``"I"``, ``"F"`` or ``"Sum"``."""
        if name == "Sum":
            return self.total
        try:
            return getattr(self, name.lower())
        except AttributeError:
            raise KeyError(name) from None

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.t, self.i, self.f)

    def to_json(self) -> dict[str, float]:
        return {"T": self.t, "I": self.i, "F": self.f}

    @classmethod
    def from_json(cls, obj: Mapping[str, float]) -> "Triplet":
        return cls(obj["T"], obj["I"], obj["F"])


@dataclass(frozen=True)
class SimplexTriplet(Triplet):
    """A triplet constrained to ``t + i + f = 1``.

    ``tol`` defaults to the exact tolerance; use :meth:`from_response` for
    values a model returned, which are only accurate to two decimals.
    """

    tol: float = field(default=SIMPLEX_EXACT_TOL, compare=False, repr=False)

    def __post_init__(self) -> None:
        super().__post_init__()
        deviation = abs(math.fsum(self.as_tuple()) - 1.0)
        if deviation > self.tol:
            raise ConstraintViolation(
                f"simplex triplet sums to {math.fsum(self.as_tuple())!r} "
                f"(deviation {deviation:.3g} > {self.tol:g})"
            )

    @classmethod
    def from_response(cls, t: float, i: float, f: float) -> "SimplexTriplet":
        return cls(t, i, f, tol=SIMPLEX_API_TOL)

    @classmethod
    def normalized(cls, t: float, i: float, f: float) -> "SimplexTriplet":
        """Project non-negative weights onto the simplex.

        Falsity is taken as the residual ``1 - (t + i)`` so that the
        correctly rounded sum never exceeds 1.
        """
        weights = (t, i, f)
        if any(w < 0 for w in weights):
            raise DomainError(f"weights must be non-negative: {weights!r}")
        total = math.fsum(weights)
        if total <= 0:
            raise DomainError("weights sum to zero")
        nt, ni = t / total, i / total
        nf = max(0.0, 1.0 - (nt + ni))
        return cls(nt, ni, nf)


def scalar_projection(e: Triplet) -> float:
    """Component sum ``t + i + f`` (correctly rounded)."""
    return math.fsum((e.t, e.i, e.f))


def is_hypertruth(e: Triplet) -> bool:
    # Strict: a sum of exactly 1 is not hyper-truth.
    return scalar_projection(e) > 1.0


def binary_entropy(p: float) -> float:
    """Shannon entropy in bits of a Bernoulli(p) variable; ``0 log 0 = 0``."""
    if math.isnan(p) or not (0.0 <= p <= 1.0):
        raise DomainError(f"probability {p!r} is outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    if p == 0.5:
        return 1.0
    q = 1.0 - p
    return -(p * math.log2(p) + q * math.log2(q))


def derive_strategy3_triplet(
    p_yes: float, p_no: float, tol: float = BINARY_PAIR_TOL
) -> Triplet:
    """Build ``(p_yes, H(p_yes), p_no)`` from an elicited yes/no pair."""
    _check_unit("p_yes", p_yes)
    _check_unit("p_no", p_no)
    if abs(math.fsum((p_yes, p_no)) - 1.0) > tol:
        raise ConstraintViolation(
            f"P_yes + P_no = {p_yes + p_no!r} deviates from 1 by more than {tol:g}"
        )
    return Triplet(p_yes, binary_entropy(p_yes), p_no)


@dataclass(frozen=True)
class HypertruthRate:
    k: int
    n: int

    @property
    def rate(self) -> float:
        return self.k / self.n


def hypertruth_rate(evaluations: Iterable[Triplet]) -> HypertruthRate:
    items = list(evaluations)
    if not items:
        raise ValueError("hyper-truth rate of an empty collection is undefined")
    k = sum(1 for e in items if is_hypertruth(e))
    return HypertruthRate(k=k, n=len(items))


def strategy_shift(
    component: str, s1_values: Sequence[float], s2_values: Sequence[float]
) -> float:
    """Mean of ``component`` under the unconstrained strategy minus the simplex one.

    Positive means the simplex constraint suppresses the component.
    """
    if component not in COMPONENTS:
        raise KeyError(f"component must be one of {COMPONENTS}, got {component!r}")
    if len(s1_values) == 0 or len(s2_values) == 0:
        raise ValueError(f"strategy shift for {component} needs non-empty inputs")
    return fmean(s1_values) - fmean(s2_values)


# --- plithogenic structure -------------------------------------------------

Aggregator = Callable[[Sequence[float]], float]

AGGREGATORS: dict[str, Aggregator] = {
    "mean": fmean,
    "min": min,
    "max": max,
}


@dataclass(frozen=True)
class PlithogenicStructure:
    """The tuple ``(P, v, V, d, c)``.

    ``membership`` maps ``(element, attribute_value)`` to a :class:`Triplet`
    and must be total over ``elements x attribute_values``. ``contradiction``
    is keyed by unordered pairs (``frozenset``); pairs missing from the map
    and the diagonal are taken as 0.
    """

    elements: frozenset[str]
    dominant_attribute: str
    attribute_values: tuple[str, ...]
    membership: Mapping[tuple[str, str], Triplet]
    contradiction: Mapping[frozenset[str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", frozenset(self.elements))
        object.__setattr__(self, "attribute_values", tuple(self.attribute_values))
        if not self.attribute_values:
            raise ValueError("attribute value spectrum V must be non-empty")
        if len(set(self.attribute_values)) != len(self.attribute_values):
            raise ValueError("attribute values must be distinct")
        missing = [
            (p, v)
            for p in sorted(self.elements)
            for v in self.attribute_values
            if (p, v) not in self.membership
        ]
        if missing:
            raise ValueError(f"membership is not total; missing {missing[:5]}")
        contradiction: dict[frozenset[str], float] = {}
        for key, value in dict(self.contradiction).items():
            pair = frozenset(key)
            if not pair <= set(self.attribute_values) or len(pair) not in (1, 2):
                raise ValueError(f"contradiction key {tuple(key)!r} is not a pair from V")
            _check_unit(f"contradiction{tuple(sorted(pair))}", value)
            if len(pair) == 1 and value != 0.0:
                raise ValueError("contradiction must vanish on the diagonal")
            contradiction[pair] = float(value)
        object.__setattr__(self, "contradiction", contradiction)

    def contradiction_degree(self, a: str, b: str) -> float:
        for v in (a, b):
            if v not in self.attribute_values:
                raise KeyError(v)
        if a == b:
            return 0.0
        return self.contradiction.get(frozenset((a, b)), 0.0)


def plithogenic_marginal(
    p: PlithogenicStructure, element: str, aggregator: str = "mean"
) -> Triplet:
    """Collapse an element's per-attribute-value memberships into one triplet."""
    if element not in p.elements:
        raise KeyError(f"unknown plithogenic element {element!r}")
    try:
        agg = AGGREGATORS[aggregator]
    except KeyError:
        raise ValueError(
            f"unknown aggregator {aggregator!r}; choose from {sorted(AGGREGATORS)}"
        ) from None
    rows = [p.membership[(element, v)] for v in p.attribute_values]
    return Triplet(
        agg([r.t for r in rows]),
        agg([r.i for r in rows]),
        agg([r.f for r in rows]),
    )


def hypertruth_region_volume(n_samples: int, seed: int | None = None) -> float:
    """Monte Carlo estimate of the share of the unit cube where the sum exceeds 1.

    The exact value is 5/6: the complement ``t + i + f <= 1`` is the corner
    simplex of volume 1/6.
    """
    import numpy as np

    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    pts = rng.random((n_samples, 3))
    return float(np.count_nonzero(pts.sum(axis=1) > 1.0)) / n_samples
