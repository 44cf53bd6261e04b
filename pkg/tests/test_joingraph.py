import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from q2o.errors import BadSelectivity, DuplicateAlias, EmptyGraph, MalformedInput, UnknownAlias
from q2o.joingraph import (
    connected_components,
    parse_join_graph,
    serialize_join_graph,
    validate,
)
from q2o.synthetic import random_graph


def doc(relations, joins=(), **extra):
    d = {"name": "g", "relations": relations, "joins": list(joins)}
    d.update(extra)
    return json.dumps(d)


def rel(alias, card, table=None):
    return {"alias": alias, "table": table or alias.lower(), "cardinality": card}


def join(left, right, sel):
    return {"left": left, "right": right, "selectivity": sel}


def test_parse_minimal():
    g = parse_join_graph(doc([rel("A", 10), rel("B", 100)], [join("A", "B", 0.1)]).encode())
    assert g.n == 2
    assert len(g.edges) == 1
    assert g.relation("B").cardinality == 100.0
    assert g.edges[0].selectivity == 0.1
    assert g.sql is None


def test_parse_keeps_sql_and_ignores_unknown_fields():
    g = parse_join_graph(doc([rel("ci", 36244344.0, "cast_info")], sql="SELECT 1;", extra={"x": 1}))
    assert g.sql == "SELECT 1;"
    assert g.relations[0].table_name == "cast_info"


def test_duplicate_alias():
    with pytest.raises(DuplicateAlias):
        parse_join_graph(doc([rel("A", 10), rel("A", 20)]))


def test_duplicate_edges_merge_multiplicatively():
    g = parse_join_graph(doc([rel("A", 10), rel("B", 100)],
                             [join("A", "B", 0.1), join("B", "A", 0.5)]))
    assert len(g.edges) == 1
    assert g.edges[0].selectivity == pytest.approx(0.05, rel=1e-15)


@pytest.mark.parametrize("text,exc", [
    ("{not json", MalformedInput),
    ("[]", MalformedInput),
    (doc([]), EmptyGraph),
    (doc([rel("A", 1)], [join("A", "Z", 0.5)]), UnknownAlias),
    (doc([rel("A", 1), rel("B", 1)], [join("A", "B", 0.0)]), BadSelectivity),
    (doc([rel("A", 1), rel("B", 1)], [join("A", "B", 1.5)]), BadSelectivity),
    (doc([rel("A", 1)], [join("A", "A", 0.5)]), MalformedInput),
    (doc([rel("1bad", 1)]), MalformedInput),
    (doc([rel("A", "ten")]), MalformedInput),
    (doc([{"table": "t", "cardinality": 1}]), MalformedInput),
])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_join_graph(text)


@pytest.mark.parametrize("card", [0, -1, 0.25])
def test_cardinality_clamped(card):
    g = parse_join_graph(doc([rel("A", card)]))
    assert g.relations[0].cardinality == 1.0


def test_validate_chain_is_clean(chain3):
    assert validate(chain3) == []


def test_validate_disconnected():
    g = parse_join_graph(doc([rel("A", 1), rel("B", 1)], sql="SELECT 1"))
    assert validate(g) == ["disconnected: cross product required"]


def test_validate_large_clique():
    g = random_graph(random.Random(0), 25, "clique")
    assert "oracle unavailable above n=20" in validate(g)


def test_validate_missing_sql(two_rel):
    assert validate(two_rel) == ["missing sql text"]


def test_components():
    chain = parse_join_graph(doc([rel("A", 1), rel("B", 1), rel("C", 1)], [join("A", "B", .5), join("B", "C", .5)]))
    assert connected_components(chain) == [["A", "B", "C"]]
    pair = parse_join_graph(doc([rel("A", 1), rel("B", 1)]))
    assert connected_components(pair) == [["A"], ["B"]]
    two = parse_join_graph(doc([rel(a, 1) for a in "ABCD"], [join("A", "B", .5), join("C", "D", .5)]))
    assert connected_components(two) == [["A", "B"], ["C", "D"]]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 9),
       topology=st.sampled_from(["chain", "star", "clique", "random"]))
def test_serialize_round_trip(seed, n, topology):
    g = random_graph(random.Random(seed), n, topology)
    text = serialize_join_graph(g)
    again = parse_join_graph(text)
    assert serialize_join_graph(again) == text
    assert sorted(again.aliases) == sorted(g.aliases)
    for e in again.edges:
        assert e.left in again.index and e.right in again.index
        assert 0 < e.selectivity <= 1
    assert all(r.cardinality >= 1 for r in again.relations)
