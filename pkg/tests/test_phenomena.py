import datetime as dt
import json

import pytest

from neutro_audit.phenomena import (
    DEFAULT_ANCHOR,
    TABLE_ORDER,
    Phenomenon,
    PhenomenonClass as P,
    anchor_statement,
    default_bank,
    dump_bank,
    load_bank,
)


def test_default_bank_has_five_canonical_statements():
    bank = default_bank()
    assert [p.cls for p in bank] == list(P)
    assert bank[P.LOGICAL_PARADOX].statement == "This sentence is false."
    assert bank[P.EPISTEMIC_IGNORANCE].statement == "The number of stars in the universe is even."
    assert bank[P.VAGUENESS].statement == "John is 1.75 meters tall, therefore John is tall."
    assert bank[P.ETHICAL_CONTRADICTION].statement == (
        "Lying to save an innocent life is morally right and wrong at the same time."
    )
    assert bank[P.FUTURE_CONTINGENCY].statement == "It will rain in New York tomorrow."
    assert bank[P.FUTURE_CONTINGENCY].date_anchor == DEFAULT_ANCHOR


def test_anchor_only_on_contingency():
    with pytest.raises(ValueError):
        Phenomenon(P.FUTURE_CONTINGENCY, "It will snow tomorrow.")
    with pytest.raises(ValueError):
        Phenomenon(P.VAGUENESS, "Tall.", date_anchor=dt.date(2026, 1, 1))
    with pytest.raises(ValueError):
        Phenomenon(P.VAGUENESS, "   ")


def test_anchor_statement():
    bank = default_bank()
    assert anchor_statement(bank[P.FUTURE_CONTINGENCY]) == "It will rain in New York on 2026-05-01."
    assert anchor_statement(bank[P.LOGICAL_PARADOX]) == "This sentence is false."
    p = Phenomenon(P.FUTURE_CONTINGENCY, "The match will be drawn.", date_anchor=dt.date(2027, 1, 2))
    assert anchor_statement(p) == "The match will be drawn on 2027-01-02."


def test_table_order_is_alphabetical_by_label():
    labels = [c.label for c in TABLE_ORDER]
    assert labels == sorted(labels)
    assert labels[0] == "Contingency (Future)"


@pytest.mark.parametrize("text", ["LogicalParadox", "Paradox (Logical)", "logical_paradox", "liar"])
def test_parse_aliases(text):
    assert P.parse(text) is P.LOGICAL_PARADOX


def test_parse_unknown():
    with pytest.raises(ValueError):
        P.parse("sorites")


def test_bank_round_trip(tmp_path):
    path = tmp_path / "bank.json"
    path.write_text(dump_bank(default_bank()), encoding="utf-8")
    assert tuple(load_bank(path)) == tuple(default_bank())
    path.write_text(json.dumps({"not": "a list"}))
    with pytest.raises(ValueError):
        load_bank(path)
