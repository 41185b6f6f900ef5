import math

import pytest
from hypothesis import given, strategies as st

import oracles
from neutro_audit.svns import (
    ConstraintViolation,
    DomainError,
    PlithogenicStructure,
    SimplexTriplet,
    Triplet,
    binary_entropy,
    derive_strategy3_triplet,
    hypertruth_rate,
    hypertruth_region_volume,
    is_hypertruth,
    plithogenic_marginal,
    scalar_projection,
    strategy_shift,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
two_dp = st.integers(0, 100).map(lambda k: k / 100)


def test_triplet_rejects_out_of_range_and_nan():
    with pytest.raises(DomainError):
        Triplet(1.01, 0, 0)
    with pytest.raises(DomainError):
        Triplet(0, -0.001, 0)
    with pytest.raises(DomainError):
        Triplet(0, 0, math.nan)
    with pytest.raises(TypeError):
        Triplet(True, 0, 0)


def test_triplet_component_and_json():
    e = Triplet(0.8, 0.9, 0.7)
    assert e.component("I") == 0.9
    assert e.component("Sum") == pytest.approx(2.4)
    with pytest.raises(KeyError):
        e.component("X")
    assert Triplet.from_json(e.to_json()) == e


@pytest.mark.parametrize("trip, total", [((0.5, 0.5, 0.5), 1.5), ((0, 1, 0.5), 1.5), ((0, 0, 0), 0.0)])
def test_scalar_projection(trip, total):
    assert scalar_projection(Triplet(*trip)) == total


def test_projection_is_not_injective():
    a, b = Triplet(0.5, 0.5, 0.5), Triplet(0, 1, 0.5)
    assert a != b and scalar_projection(a) == scalar_projection(b)


def test_hypertruth_boundary_is_strict():
    assert not is_hypertruth(Triplet(0.3, 0.3, 0.4))
    assert not is_hypertruth(Triplet(0.1, 0.2, 0.7))  # naive float sum is 0.9999999999999999
    assert is_hypertruth(Triplet(0.8, 0.9, 0.7))
    assert is_hypertruth(Triplet(0.34, 0.33, 0.34))


@given(two_dp, two_dp)
def test_two_decimal_simplex_sums_never_exceed_one(t, i):
    if t + i > 1.0:
        return
    f = round(1.0 - t - i, 2)
    assert not is_hypertruth(Triplet(t, i, f))


def test_simplex_triplet_tolerances():
    SimplexTriplet(0.2, 0.3, 0.5)
    with pytest.raises(ConstraintViolation):
        SimplexTriplet(0.2, 0.3, 0.51)
    SimplexTriplet.from_response(0.2, 0.3, 0.505)
    with pytest.raises(ConstraintViolation):
        SimplexTriplet.from_response(0.2, 0.3, 0.52)


@given(st.floats(0.001, 10), st.floats(0.001, 10), st.floats(0.001, 10))
def test_normalized_simplex_is_never_hypertruth(a, b, c):
    e = SimplexTriplet.normalized(a, b, c)
    assert not is_hypertruth(e)
    assert abs(e.total - 1.0) <= 1e-9


def test_normalized_rejects_bad_weights():
    with pytest.raises(DomainError):
        SimplexTriplet.normalized(-1, 1, 1)
    with pytest.raises(DomainError):
        SimplexTriplet.normalized(0, 0, 0)


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert binary_entropy(0.25) == pytest.approx(0.811278, abs=1e-6)
    for bad in (-0.01, 1.01, math.nan):
        with pytest.raises(DomainError):
            binary_entropy(bad)


@given(unit)
def test_binary_entropy_matches_high_precision(p):
    assert binary_entropy(p) == pytest.approx(oracles.binary_entropy_mp(p), abs=1e-12)


@given(unit)
def test_binary_entropy_symmetric_and_bounded(p):
    h = binary_entropy(p)
    assert 0.0 <= h <= 1.0
    assert h == pytest.approx(binary_entropy(1.0 - p), abs=1e-12)
    if p != 0.5:
        assert h < 1.0


@pytest.mark.parametrize("pair, expected", [
    ((0.5, 0.5), (0.5, 1.0, 0.5)),
    ((1.0, 0.0), (1.0, 0.0, 0.0)),
    ((0.25, 0.75), (0.25, 0.8112781244591328, 0.75)),
])
def test_derive_strategy3_triplet(pair, expected):
    got = derive_strategy3_triplet(*pair).as_tuple()
    assert got == pytest.approx(expected, abs=1e-12)


def test_derive_strategy3_tolerance():
    derive_strategy3_triplet(0.6, 0.405)
    with pytest.raises(ConstraintViolation):
        derive_strategy3_triplet(0.6, 0.3)
    with pytest.raises(DomainError):
        derive_strategy3_triplet(1.2, -0.2)


@given(unit)
def test_derived_triplet_components_in_unit_interval(p):
    e = derive_strategy3_triplet(p, 1.0 - p)
    assert all(0.0 <= v <= 1.0 for v in e.as_tuple())


def test_hypertruth_rate():
    items = [Triplet(0.8, 0.9, 0.7), Triplet(0.3, 0.3, 0.4), Triplet(0.2, 0.2, 0.2)]
    r = hypertruth_rate(items)
    assert (r.k, r.n) == (1, 3) and r.rate == pytest.approx(1 / 3)
    assert hypertruth_rate([Triplet(0.5, 0.5, 0.5)] * 4).rate == 1.0
    with pytest.raises(ValueError):
        hypertruth_rate([])


def test_strategy_shift():
    assert strategy_shift("T", [0.6, 0.4], [0.2, 0.2]) == pytest.approx(0.3)
    assert strategy_shift("I", [0.1], [0.3]) == pytest.approx(-0.2)
    with pytest.raises(KeyError):
        strategy_shift("Sum", [0.1], [0.1])
    with pytest.raises(ValueError):
        strategy_shift("T", [], [0.1])


def test_hypertruth_volume_matches_exact_value():
    # Complement of the region is the corner simplex of volume 1/6.
    assert hypertruth_region_volume(1_000_000, seed=1) == pytest.approx(5 / 6, abs=0.002)


# --- plithogenic -----------------------------------------------------------


def _structure(values):
    vs = tuple(f"v{j}" for j in range(len(values)))
    return PlithogenicStructure(
        elements={"x"},
        dominant_attribute="colour",
        attribute_values=vs,
        membership={("x", v): Triplet(*t) for v, t in zip(vs, values)},
    )


def test_marginal_single_value_is_identity():
    assert plithogenic_marginal(_structure([(0.3, 0.6, 0.9)]), "x") == Triplet(0.3, 0.6, 0.9)


def test_marginal_mean_examples():
    assert plithogenic_marginal(_structure([(1, 1, 1), (0, 0, 0)]), "x") == Triplet(0.5, 0.5, 0.5)
    m = plithogenic_marginal(_structure([(0.2, 0, 0), (0.4, 0, 0), (0.9, 0, 0)]), "x")
    assert m.t == pytest.approx(0.5)


def test_marginal_other_aggregators_and_errors():
    p = _structure([(0.2, 0.5, 0.1), (0.6, 0.3, 0.4)])
    assert plithogenic_marginal(p, "x", "min") == Triplet(0.2, 0.3, 0.1)
    assert plithogenic_marginal(p, "x", "max") == Triplet(0.6, 0.5, 0.4)
    with pytest.raises(KeyError):
        plithogenic_marginal(p, "y")
    with pytest.raises(ValueError):
        plithogenic_marginal(p, "x", "median")


@given(st.lists(st.tuples(unit, unit, unit), min_size=1, max_size=8),
       st.sampled_from(["mean", "min", "max"]))
def test_marginal_is_valid_triplet(values, agg):
    m = plithogenic_marginal(_structure(values), "x", agg)
    assert all(0.0 <= v <= 1.0 for v in m.as_tuple())


def test_plithogenic_invariants():
    with pytest.raises(ValueError, match="not total"):
        PlithogenicStructure({"x", "y"}, "a", ("v",), {("x", "v"): Triplet(0, 0, 0)})
    with pytest.raises(ValueError, match="diagonal"):
        PlithogenicStructure({"x"}, "a", ("v",), {("x", "v"): Triplet(0, 0, 0)},
                             {frozenset({"v"}): 0.4})
    with pytest.raises(DomainError):
        PlithogenicStructure({"x"}, "a", ("v", "w"),
                             {("x", "v"): Triplet(0, 0, 0), ("x", "w"): Triplet(0, 0, 0)},
                             {frozenset({"v", "w"}): 1.5})
    p = PlithogenicStructure({"x"}, "a", ("v", "w"),
                             {("x", "v"): Triplet(0, 0, 0), ("x", "w"): Triplet(0, 0, 0)},
                             {frozenset({"v", "w"}): 0.7})
    assert p.contradiction_degree("v", "w") == p.contradiction_degree("w", "v") == 0.7
    assert p.contradiction_degree("v", "v") == 0.0
