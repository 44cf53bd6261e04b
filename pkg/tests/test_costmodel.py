import math
import random
from itertools import permutations

import pytest
from hypothesis import given, settings, strategies as st

from q2o.costmodel import (
    estimate_cardinality,
    has_cross_product,
    plan_cost_cout,
    plan_cost_logproduct,
)
from q2o.errors import EmptySubset, NotAPermutation
from q2o.joingraph import connected_components
from q2o.synthetic import random_graph


def brute_rows(graph, subset):
    """Reference estimator written directly from the definition."""
    subset = set(subset)
    rows = 1.0
    for r in graph.relations:
        if r.alias in subset:
            rows *= r.cardinality
    for e in graph.edges:
        if e.left in subset and e.right in subset:
            rows *= e.selectivity
    return rows


def brute_cout(graph, order):
    return sum(brute_rows(graph, order[:k]) for k in range(2, len(order) + 1))


# chain3: A 10, B 100, C 20; A-B 0.1, B-C 0.05
@pytest.mark.parametrize("subset,expected", [
    (["A"], 10.0),
    (["A", "B"], 100.0),
    (["A", "C"], 200.0),
    (["A", "B", "C"], 100.0),
])
def test_chain3_cardinalities(chain3, subset, expected):
    assert estimate_cardinality(chain3, subset) == pytest.approx(expected, rel=1e-12)
    assert brute_rows(chain3, subset) == pytest.approx(expected, rel=1e-12)


def test_empty_subset(chain3):
    with pytest.raises(EmptySubset):
        estimate_cardinality(chain3, [])


def test_cout_chain3(chain3):
    assert plan_cost_cout(chain3, ["A", "B", "C"]) == pytest.approx(200.0)
    assert plan_cost_cout(chain3, ["A", "C", "B"]) == pytest.approx(300.0)
    costs = {p: plan_cost_cout(chain3, p) for p in permutations("ABC")}
    assert min(costs.values()) == pytest.approx(200.0)
    assert sorted(p for p, c in costs.items() if c == min(costs.values())) == [
        ("A", "B", "C"), ("B", "A", "C"), ("B", "C", "A"), ("C", "B", "A")]


def test_cout_single(single):
    assert plan_cost_cout(single, ["A"]) == 0.0
    assert plan_cost_logproduct(single, ["A"]) == 0.0


def test_logproduct(chain3, two_rel):
    assert plan_cost_logproduct(chain3, ["A", "B", "C"]) == pytest.approx(2 * math.log2(100), rel=1e-12)
    assert plan_cost_logproduct(two_rel, ["A", "B"]) == pytest.approx(6.643856189774724, rel=1e-12)


@pytest.mark.parametrize("order", [["A", "B"], ["A", "B", "B"], ["A", "B", "D"]])
def test_not_a_permutation(chain3, order):
    with pytest.raises(NotAPermutation):
        plan_cost_cout(chain3, order)


def test_cross_product_detection(chain3):
    assert not has_cross_product(chain3, ["A", "B", "C"])
    assert has_cross_product(chain3, ["A", "C", "B"])


graphs = st.builds(
    lambda seed, n, topo: random_graph(random.Random(seed), n, topo),
    st.integers(0, 100_000), st.integers(2, 7), st.sampled_from(["chain", "star", "clique", "random"]))


@settings(max_examples=60, deadline=None)
@given(graph=graphs, data=st.data())
def test_cost_properties(graph, data):
    order = data.draw(st.permutations(list(graph.aliases)))
    cout = plan_cost_cout(graph, order)
    assert cout == pytest.approx(brute_cout(graph, order), rel=1e-9)
    assert cout >= estimate_cardinality(graph, graph.aliases) * (1 - 1e-12)
    logs = [math.log2(estimate_cardinality(graph, order[:k])) for k in range(2, len(order) + 1)]
    assert plan_cost_logproduct(graph, order) == pytest.approx(math.fsum(logs), rel=1e-9, abs=1e-9)
    # order independence of subsets
    subset = order[: data.draw(st.integers(1, len(order)))]
    shuffled = data.draw(st.permutations(subset))
    assert estimate_cardinality(graph, subset) == pytest.approx(estimate_cardinality(graph, shuffled), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_multiplicative_across_components(seed):
    rng = random.Random(seed)
    left, right = random_graph(rng, 3, "random"), random_graph(rng, 3, "chain")
    from q2o.joingraph import JoinEdge, Relation, build_graph
    rels = [Relation("l" + r.alias, r.table_name, r.cardinality) for r in left.relations]
    rels += [Relation("r" + r.alias, r.table_name, r.cardinality) for r in right.relations]
    edges = [JoinEdge("l" + e.left, "l" + e.right, e.selectivity) for e in left.edges]
    edges += [JoinEdge("r" + e.left, "r" + e.right, e.selectivity) for e in right.edges]
    g = build_graph("split", rels, edges)
    c1, c2 = connected_components(g)
    s1, s2 = c1[:2], c2[1:]
    assert estimate_cardinality(g, s1 + s2) == pytest.approx(
        estimate_cardinality(g, s1) * estimate_cardinality(g, s2), rel=1e-12)
