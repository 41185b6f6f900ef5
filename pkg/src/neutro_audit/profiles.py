"""Built-in mock profiles.

``S1`` cells use the per-phenomenon means and SDs published for the
unconstrained strategy. ``S2`` cells use the published probabilistic means of
T and I with F as the residual; their SDs were not published and are set to
0.1. ``S3`` cells have no published values at all: P_yes is set to
``T / (T + F)`` of the unconstrained means, a placeholder persona only.
"""

from __future__ import annotations

from .backends import CellProfile
from .phenomena import PhenomenonClass as P
from .prompting import StrategyKind as S

# (T mean, T sd, I mean, I sd, F mean, F sd)
_S1 = {
    P.FUTURE_CONTINGENCY: (0.450, 0.119, 0.475, 0.129, 0.305, 0.147),
    P.ETHICAL_CONTRADICTION: (0.605, 0.110, 0.530, 0.187, 0.470, 0.113),
    P.EPISTEMIC_IGNORANCE: (0.160, 0.216, 0.865, 0.201, 0.280, 0.324),
    P.LOGICAL_PARADOX: (0.120, 0.207, 0.865, 0.230, 0.370, 0.421),
    P.VAGUENESS: (0.562, 0.118, 0.345, 0.139, 0.242, 0.127),
}

# (T mean, I mean)
_S2 = {
    P.FUTURE_CONTINGENCY: (0.355, 0.470),
    P.ETHICAL_CONTRADICTION: (0.338, 0.515),
    P.EPISTEMIC_IGNORANCE: (0.231, 0.482),
    P.LOGICAL_PARADOX: (0.000, 0.900),
    P.VAGUENESS: (0.450, 0.305),
}
_S2_SD = 0.1
_S3_SD = 0.1


def table_profile() -> dict[tuple[P, S], CellProfile]:
    profile: dict[tuple[P, S], CellProfile] = {}
    for cls, (tm, ts, im, is_, fm, fs) in _S1.items():
        profile[(cls, S.NEUTROSOPHIC)] = CellProfile(
            means={"T": tm, "I": im, "F": fm}, sds={"T": ts, "I": is_, "F": fs}
        )
        profile[(cls, S.ENTROPY_DERIVED)] = CellProfile(
            means={"P_yes": round(tm / (tm + fm), 3)}, sds={"P_yes": _S3_SD}
        )
    for cls, (tm, im) in _S2.items():
        fm = round(1.0 - tm - im, 3)
        profile[(cls, S.PROBABILISTIC)] = CellProfile(
            means={"T": tm, "I": im, "F": fm},
            sds={"T": _S2_SD, "I": _S2_SD, "F": _S2_SD},
        )
    return profile


def constant_profile(t: float, i: float, f: float, p_yes: float = 0.5) -> dict[tuple[P, S], CellProfile]:
    """Zero-variance profile: every cell answers the same values."""
    out = {}
    for cls in P:
        for strat in S:
            if strat is S.ENTROPY_DERIVED:
                out[(cls, strat)] = CellProfile(means={"P_yes": p_yes})
            else:
                out[(cls, strat)] = CellProfile(means={"T": t, "I": i, "F": f})
    return out


PROFILES = {"table": table_profile}
