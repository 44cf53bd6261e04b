"""Exact C_out oracles: left-deep subset DP, bushy subset DP and brute-force enumeration.

Costs are accumulated exactly (integers in units of 2**-1074, the smallest
double) so ties are real ties and the lexicographic tie-break is
well-defined; results are rounded to float once at the end, matching the
correctly rounded sums of :func:`q2o.costmodel.plan_cost_cout`.
"""

from __future__ import annotations

from itertools import permutations
from typing import Optional

from q2o.costmodel import cardinality_of_mask
from q2o.errors import TooLarge
from q2o.hints import Join, JoinTree
from q2o.joingraph import ORACLE_LIMIT, JoinGraph

BUSHY_LIMIT = 16
EXHAUSTIVE_LIMIT = 8

_SCALE_BITS = 1074


def _exact(value: float) -> int:
    num, den = value.as_integer_ratio()
    return num << (_SCALE_BITS - (den.bit_length() - 1))


def _to_float(exact: int) -> float:
    return exact / (1 << _SCALE_BITS)


def _exact_cards(graph: JoinGraph) -> list[int]:
    cards = [0] * (1 << graph.n)
    for mask in range(1, 1 << graph.n):
        cards[mask] = _exact(cardinality_of_mask(graph, mask))
    return cards


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def dp_leftdeep(graph: JoinGraph, allow_cross_products: bool = True) -> tuple[list[str], float]:
    """Optimal left-deep order under C_out; ties go to the lexicographically smallest alias sequence.

    With ``allow_cross_products=False`` only orders whose every join has a
    connecting predicate are considered; the cost is ``inf`` when none exists.
    """
    n = graph.n
    if n > ORACLE_LIMIT:
        raise TooLarge(f"oracle unavailable above n={ORACLE_LIMIT}")
    aliases = graph.aliases
    if n == 1:
        return [aliases[0]], 0.0

    adj = graph.adjacency_masks
    size = 1 << n
    best: list[Optional[int]] = [None] * size
    last = [-1] * size
    for r in range(n):
        best[1 << r] = 0
        last[1 << r] = r

    def sequence(mask: int) -> list[str]:
        seq = []
        while mask:
            r = last[mask]
            seq.append(aliases[r])
            mask ^= 1 << r
        seq.reverse()
        return seq

    for mask in range(3, size):
        if not mask & (mask - 1):
            continue
        card = _exact(cardinality_of_mask(graph, mask))
        cur = None
        for r in _bits(mask):
            prev = mask ^ (1 << r)
            base = best[prev]
            if base is None or (not allow_cross_products and not adj[r] & prev):
                continue
            total = base + card
            if cur is None or total < cur or (total == cur and
                                              sequence(prev) + [aliases[r]] < sequence(mask)):
                cur = total
                best[mask] = total
                last[mask] = r

    full = size - 1
    if best[full] is None:
        return [], float("inf")
    return sequence(full), _to_float(best[full])


def exhaustive(graph: JoinGraph, allow_cross_products: bool = True) -> tuple[list[str], float]:
    """Minimum-C_out order by enumerating all n! permutations in lexicographic alias order."""
    n = graph.n
    if n > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"exhaustive enumeration unavailable above n={EXHAUSTIVE_LIMIT}")
    if n == 1:
        return [graph.aliases[0]], 0.0
    adj = graph.adjacency_masks
    cards = _exact_cards(graph)
    best_cost, best_order = None, None
    for order in permutations(sorted(graph.aliases)):
        mask = 1 << graph.index[order[0]]
        total = 0
        for alias in order[1:]:
            bit = graph.index[alias]
            if not allow_cross_products and not adj[bit] & mask:
                break
            mask |= 1 << bit
            total += cards[mask]
        else:
            if best_cost is None or total < best_cost:
                best_cost, best_order = total, list(order)
    if best_cost is None:
        return [], float("inf")
    return best_order, _to_float(best_cost)


def dp_bushy(graph: JoinGraph, allow_cross_products: bool = True) -> tuple[JoinTree, float]:
    """Optimal bushy join tree under C_out (every join output counted, leaves free)."""
    n = graph.n
    if n > BUSHY_LIMIT:
        raise TooLarge(f"bushy oracle unavailable above n={BUSHY_LIMIT}")
    aliases = graph.aliases
    if n == 1:
        return aliases[0], 0.0
    adj = graph.adjacency_masks
    size = 1 << n

    def touches(a: int, b: int) -> bool:
        return any(adj[r] & b for r in _bits(a))

    best: list[Optional[int]] = [None] * size
    split = [0] * size
    for r in range(n):
        best[1 << r] = 0

    for mask in range(3, size):
        if not mask & (mask - 1):
            continue
        low = mask & -mask
        rest = mask ^ low
        card = _exact(cardinality_of_mask(graph, mask))
        cur = None
        # Left side always holds the lowest member, so each unordered split is seen once.
        sub = rest
        while True:
            left = sub | low
            right = mask ^ left
            if right:
                bl, br = best[left], best[right]
                if bl is not None and br is not None and (allow_cross_products or touches(left, right)):
                    total = bl + br + card
                    if cur is None or total < cur:
                        cur = total
                        split[mask] = left
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[mask] = cur

    full = size - 1
    if best[full] is None:
        return "", float("inf")

    def build(mask: int) -> JoinTree:
        if not mask & (mask - 1):
            return aliases[mask.bit_length() - 1]
        left = split[mask]
        return Join(build(left), build(mask ^ left))

    return build(full), _to_float(best[full])
