import json

import pytest

from q2o.joingraph import JoinEdge, Relation, build_graph


@pytest.fixture
def chain3():
    return build_graph(
        "chain3",
        [Relation("A", "a", 10), Relation("B", "b", 100), Relation("C", "c", 20)],
        [JoinEdge("A", "B", 0.1), JoinEdge("B", "C", 0.05)],
        sql="SELECT * FROM a A, b B, c C WHERE A.id = B.a_id AND B.id = C.b_id;",
    )


@pytest.fixture
def two_rel():
    return build_graph("two", [Relation("A", "a", 10), Relation("B", "b", 100)], [JoinEdge("A", "B", 0.1)])


@pytest.fixture
def single():
    return build_graph("one", [Relation("A", "a", 10)])


def instance_doc(graph):
    return {
        "name": graph.name,
        "sql": graph.sql,
        "relations": [{"alias": r.alias, "table": r.table_name, "cardinality": r.cardinality}
                      for r in graph.relations],
        "joins": [{"left": e.left, "right": e.right, "selectivity": e.selectivity} for e in graph.edges],
    }


@pytest.fixture
def write_instance(tmp_path):
    def write(graph, name=None):
        path = tmp_path / f"{name or graph.name}.json"
        doc = instance_doc(graph)
        if doc["sql"] is None:
            del doc["sql"]
        path.write_text(json.dumps(doc))
        return path
    return write
