"""Neutrosophic (T, I, F) elicitation and hyper-truth analysis for model APIs."""

__version__ = "0.1.0"

from .svns import (  # noqa: E402
    PlithogenicStructure,
    SimplexTriplet,
    Triplet,
    binary_entropy,
    derive_strategy3_triplet,
    hypertruth_rate,
    is_hypertruth,
    plithogenic_marginal,
    scalar_projection,
    strategy_shift,
)
from .phenomena import Phenomenon, PhenomenonClass, anchor_statement, default_bank  # noqa: E402
from .prompting import ParsedResponse, StrategyKind, parse_response, render_prompt  # noqa: E402
