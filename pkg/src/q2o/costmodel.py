"""Cardinality estimation under predicate independence, and plan costs over left-deep orders.

Subsets of relations are bitmasks over graph positions (bit r set means the
relation at position r is a member). Every caller goes through
:func:`cardinality_of_mask`, which multiplies factors in one fixed order, so
the same subset always produces the bit-identical float.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from q2o.errors import EmptySubset, NotAPermutation
from q2o.joingraph import JoinGraph


def cardinality_of_mask(graph: JoinGraph, mask: int) -> float:
    if mask == 0:
        raise EmptySubset("cardinality of the empty subset is undefined")
    rows = 1.0
    for r, rel in enumerate(graph.relations):
        if not mask >> r & 1:
            continue
        rows *= rel.cardinality
        for u, sel in graph.lower_neighbors[r]:
            if mask >> u & 1:
                rows *= sel
    return rows


class CardinalityCache:
    """Memoized :func:`cardinality_of_mask` (and its log2) for one graph.

    Safe to share between threads: entries are deterministic, so a racing
    double computation stores the same value twice.
    """

    def __init__(self, graph: JoinGraph):
        self.graph = graph
        self._rows: dict[int, float] = {}
        self._log: dict[int, float] = {}

    def rows(self, mask: int) -> float:
        try:
            return self._rows[mask]
        except KeyError:
            value = self._rows[mask] = cardinality_of_mask(self.graph, mask)
            return value

    def log2(self, mask: int) -> float:
        try:
            return self._log[mask]
        except KeyError:
            value = self._log[mask] = math.log2(self.rows(mask))
            return value


def estimate_cardinality(graph: JoinGraph, subset: Iterable[str]) -> float:
    """Rows produced by joining ``subset``: product of member cardinalities and internal selectivities."""
    return cardinality_of_mask(graph, graph.mask_of(subset))


def order_positions(graph: JoinGraph, order: Sequence[str]) -> list[int]:
    """Map an alias order to relation positions, checking it is a permutation of all aliases."""
    if len(order) != graph.n or set(order) != set(graph.aliases):
        raise NotAPermutation(f"{list(order)!r} is not a permutation of {list(graph.aliases)!r}")
    return [graph.index[a] for a in order]


def prefix_masks(positions: Sequence[int]) -> list[int]:
    masks = []
    mask = 0
    for p in positions:
        mask |= 1 << p
        masks.append(mask)
    return masks


# Sums are correctly rounded (fsum) so a plan's cost does not depend on
# summation order; the exact oracles compare exact sums and round the same way.
def cout_of_positions(cache: CardinalityCache, positions: Sequence[int]) -> float:
    terms = []
    mask = 1 << positions[0]
    for p in positions[1:]:
        mask |= 1 << p
        terms.append(cache.rows(mask))
    return math.fsum(terms)


def logproduct_of_positions(cache: CardinalityCache, positions: Sequence[int]) -> float:
    terms = []
    mask = 1 << positions[0]
    for p in positions[1:]:
        mask |= 1 << p
        terms.append(cache.log2(mask))
    return math.fsum(terms)


def plan_cost_cout(graph: JoinGraph, order: Sequence[str]) -> float:
    """C_out: sum of intermediate result sizes of the left-deep plan, the base scan excluded."""
    positions = order_positions(graph, order)
    return cout_of_positions(CardinalityCache(graph), positions)


def plan_cost_logproduct(graph: JoinGraph, order: Sequence[str]) -> float:
    """log2 of the product of intermediate result sizes (the QUBO-compatible surrogate)."""
    positions = order_positions(graph, order)
    return logproduct_of_positions(CardinalityCache(graph), positions)


def has_cross_product(graph: JoinGraph, order: Sequence[str]) -> bool:
    """True when some relation after the first joins the prefix without a connecting edge."""
    positions = order_positions(graph, order)
    return positions_have_cross_product(graph, positions)


def positions_have_cross_product(graph: JoinGraph, positions: Sequence[int]) -> bool:
    adj = graph.adjacency_masks
    mask = 1 << positions[0]
    for p in positions[1:]:
        if not adj[p] & mask:
            return True
        mask |= 1 << p
    return False
