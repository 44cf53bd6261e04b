"""Join-order instances: relations, join edges and the JSON instance format."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

from q2o.errors import (
    BadSelectivity,
    DuplicateAlias,
    EmptyGraph,
    MalformedInput,
    UnknownAlias,
)

ALIAS_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*")

# Largest instance the exact oracles (subset DP) accept.
ORACLE_LIMIT = 20


@dataclass(frozen=True)
class Relation:
    alias: str
    table_name: str
    cardinality: float


@dataclass(frozen=True)
class JoinEdge:
    left: str
    right: str
    selectivity: float

    def pair(self) -> frozenset:
        return frozenset((self.left, self.right))


@dataclass(frozen=True)
class JoinGraph:
    name: str
    relations: tuple[Relation, ...]
    edges: tuple[JoinEdge, ...] = ()
    sql: Optional[str] = None

    @property
    def n(self) -> int:
        return len(self.relations)

    @cached_property
    def aliases(self) -> tuple[str, ...]:
        return tuple(r.alias for r in self.relations)

    @cached_property
    def index(self) -> dict[str, int]:
        return {alias: i for i, alias in enumerate(self.aliases)}

    @cached_property
    def lower_neighbors(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        """For each relation position r, the (u, selectivity) pairs of edges with u < r, ascending in u."""
        lists: list[list[tuple[int, float]]] = [[] for _ in self.relations]
        for e in self.edges:
            a, b = self.index[e.left], self.index[e.right]
            lo, hi = min(a, b), max(a, b)
            lists[hi].append((lo, e.selectivity))
        return tuple(tuple(sorted(lst)) for lst in lists)

    @cached_property
    def adjacency_masks(self) -> tuple[int, ...]:
        masks = [0] * self.n
        for e in self.edges:
            a, b = self.index[e.left], self.index[e.right]
            masks[a] |= 1 << b
            masks[b] |= 1 << a
        return tuple(masks)

    def relation(self, alias: str) -> Relation:
        try:
            return self.relations[self.index[alias]]
        except KeyError:
            raise UnknownAlias(alias) from None

    def mask_of(self, aliases: Iterable[str]) -> int:
        mask = 0
        for a in aliases:
            if a not in self.index:
                raise UnknownAlias(a)
            mask |= 1 << self.index[a]
        return mask

    def aliases_of(self, mask: int) -> list[str]:
        return [a for i, a in enumerate(self.aliases) if mask >> i & 1]

    def is_connected(self) -> bool:
        return len(connected_components(self)) <= 1


def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedInput(f"{what}: expected a number, got {value!r}")
    return float(value)


def build_graph(name: str, relations: Iterable[Relation], edges: Iterable[JoinEdge] = (),
                sql: Optional[str] = None) -> JoinGraph:
    """Validate and normalize parts into a JoinGraph.

    Cardinalities are clamped to at least 1 and duplicate predicates on the
    same alias pair are merged by multiplying their selectivities.
    """
    rels: list[Relation] = []
    seen: set[str] = set()
    for r in relations:
        if not ALIAS_RE.fullmatch(r.alias):
            raise MalformedInput(f"alias {r.alias!r} is not a plain identifier")
        if r.alias in seen:
            raise DuplicateAlias(r.alias)
        seen.add(r.alias)
        card = float(r.cardinality)
        if card != card:
            raise MalformedInput(f"cardinality of {r.alias} is NaN")
        rels.append(Relation(r.alias, r.table_name, max(card, 1.0)))
    if not rels:
        raise EmptyGraph(f"instance {name!r} has no relations")

    merged: dict[frozenset, JoinEdge] = {}
    for e in edges:
        for a in (e.left, e.right):
            if a not in seen:
                raise UnknownAlias(f"join endpoint {a!r} is not a relation of {name!r}")
        if e.left == e.right:
            raise MalformedInput(f"self-join edge on {e.left!r}")
        sel = float(e.selectivity)
        if not 0.0 < sel <= 1.0:
            raise BadSelectivity(f"selectivity {sel!r} on {e.left}-{e.right} outside (0, 1]")
        key = e.pair()
        if key in merged:
            prev = merged[key]
            merged[key] = JoinEdge(prev.left, prev.right, prev.selectivity * sel)
        else:
            merged[key] = JoinEdge(e.left, e.right, sel)
    return JoinGraph(name=name, relations=tuple(rels), edges=tuple(merged.values()), sql=sql)


def parse_join_graph(data) -> JoinGraph:
    """Parse an instance file (bytes or str) into a validated JoinGraph."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInput(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedInput("top level must be an object")

    name = doc.get("name", "")
    if not isinstance(name, str):
        raise MalformedInput("name must be a string")
    sql = doc.get("sql")
    if sql is not None and not isinstance(sql, str):
        raise MalformedInput("sql must be a string")
    raw_rels = doc.get("relations")
    raw_joins = doc.get("joins", [])
    if not isinstance(raw_rels, list) or not isinstance(raw_joins, list):
        raise MalformedInput("relations and joins must be arrays")

    relations = []
    for item in raw_rels:
        if not isinstance(item, dict):
            raise MalformedInput("relation entries must be objects")
        try:
            alias, table = item["alias"], item.get("table", item["alias"])
        except KeyError:
            raise MalformedInput("relation entry without alias") from None
        if not isinstance(alias, str) or not isinstance(table, str):
            raise MalformedInput("alias and table must be strings")
        card = _number(item.get("cardinality"), f"cardinality of {alias}")
        relations.append(Relation(alias, table, card))

    edges = []
    for item in raw_joins:
        if not isinstance(item, dict) or "left" not in item or "right" not in item:
            raise MalformedInput("join entries need left and right")
        left, right = item["left"], item["right"]
        if not isinstance(left, str) or not isinstance(right, str):
            raise MalformedInput("join endpoints must be strings")
        sel = _number(item.get("selectivity"), f"selectivity of {left}-{right}")
        edges.append(JoinEdge(left, right, sel))

    return build_graph(name, relations, edges, sql)


def load_join_graph(path) -> JoinGraph:
    with open(path, "rb") as fh:
        return parse_join_graph(fh.read())


def canonical_dict(graph: JoinGraph) -> dict:
    """Canonical form: relations sorted by alias, edge endpoints ordered, edges sorted."""
    doc: dict = {"name": graph.name}
    if graph.sql is not None:
        doc["sql"] = graph.sql
    doc["relations"] = [
        {"alias": r.alias, "table": r.table_name, "cardinality": r.cardinality}
        for r in sorted(graph.relations, key=lambda r: r.alias)
    ]
    joins = []
    for e in graph.edges:
        left, right = sorted((e.left, e.right))
        joins.append({"left": left, "right": right, "selectivity": e.selectivity})
    doc["joins"] = sorted(joins, key=lambda j: (j["left"], j["right"]))
    return doc


def serialize_join_graph(graph: JoinGraph) -> str:
    return json.dumps(canonical_dict(graph), indent=2) + "\n"


def connected_components(graph: JoinGraph) -> list[list[str]]:
    """Maximal edge-connected alias groups, each in graph order, groups ordered by first member."""
    adj = graph.adjacency_masks
    unseen = (1 << graph.n) - 1
    groups = []
    while unseen:
        start = (unseen & -unseen).bit_length() - 1
        comp = frontier = 1 << start
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= adj[low.bit_length() - 1]
                f ^= low
            frontier = nxt & ~comp
            comp |= frontier
        unseen &= ~comp
        groups.append(graph.aliases_of(comp))
    return groups


def validate(graph: JoinGraph) -> list[str]:
    warnings = []
    if len(connected_components(graph)) > 1:
        warnings.append("disconnected: cross product required")
    if graph.n > ORACLE_LIMIT:
        warnings.append(f"oracle unavailable above n={ORACLE_LIMIT}")
    if not graph.sql:
        warnings.append("missing sql text")
    return warnings
