"""Solver-facing encodings of a join-order instance.

Two encodings are provided:

* :class:`PermutationModel` -- candidates are permutations of the aliases and
  the objective is evaluated directly (C_out or the log-product surrogate).
* :class:`Qubo` -- a one-hot binary model over ``x[r, s]`` ("relation r sits
  at position s") whose energy on a valid permutation matrix equals the
  log-product surrogate, plus a penalty large enough that no assignment
  violating the one-hot constraints can beat a valid one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence, Union

from q2o.costmodel import (
    CardinalityCache,
    positions_have_cross_product,
    cout_of_positions,
    logproduct_of_positions,
    order_positions,
)
from q2o.errors import EmptyGraph, LengthMismatch, TooSmall
from q2o.joingraph import JoinGraph


# Instances up to this size get a dense per-subset lookup table during search.
TABLE_LIMIT = 16


class Objective(str, enum.Enum):
    COUT = "cout"
    LOGPRODUCT = "logproduct"


@dataclass
class PermutationModel:
    graph: JoinGraph
    objective: Objective = Objective.COUT
    allow_cross_products: bool = True
    cache: CardinalityCache = field(init=False, repr=False)

    def __post_init__(self):
        self.objective = Objective(self.objective)
        self.cache = CardinalityCache(self.graph)
        self._fn = cout_of_positions if self.objective is Objective.COUT else logproduct_of_positions

    @property
    def n(self) -> int:
        return self.graph.n

    def evaluate_positions(self, positions: Sequence[int]) -> float:
        if len(positions) < 2:
            return 0.0
        if not self.allow_cross_products and positions_have_cross_product(self.graph, positions):
            return math.inf
        return self._fn(self.cache, positions)

    def evaluate(self, order: Sequence[str]) -> float:
        return self.evaluate_positions(order_positions(self.graph, order))

    def search_evaluator(self) -> Callable[[Sequence[int]], float]:
        """Fast objective over positions for inner search loops.

        Sums left to right instead of exactly, so results can differ from
        :meth:`evaluate_positions` in the last bits; report through the latter.
        """
        n = self.graph.n
        if n <= TABLE_LIMIT:
            rows = [0.0] + [self.cache.rows(m) for m in range(1, 1 << n)]
            values = rows if self.objective is Objective.COUT else [0.0] + [math.log2(v) for v in rows[1:]]
            lookup = values.__getitem__
        else:
            lookup = self.cache.rows if self.objective is Objective.COUT else self.cache.log2
        adj = self.graph.adjacency_masks
        strict = not self.allow_cross_products
        inf = math.inf

        def evaluate(positions):
            mask = 1 << positions[0]
            total = 0.0
            for p in positions[1:]:
                if strict and not adj[p] & mask:
                    return inf
                mask |= 1 << p
                total += lookup(mask)
            return total

        return evaluate


def build_nl_model(graph: JoinGraph, objective: Union[Objective, str] = Objective.COUT,
                   allow_cross_products: bool = True) -> PermutationModel:
    if graph.n < 1:
        raise EmptyGraph("cannot model an instance with no relations")
    return PermutationModel(graph, Objective(objective), allow_cross_products)


@dataclass(frozen=True)
class Qubo:
    """Binary quadratic model over n*n one-hot variables, variable ``r*n + s`` meaning relation r at position s."""

    graph: JoinGraph
    linear: dict[int, float]
    quadratic: dict[tuple[int, int], float]  # keys (i, j) with i < j
    offset: float
    penalty_weight: float

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def n_vars(self) -> int:
        return self.graph.n ** 2

    def idx(self, r: int, s: int) -> int:
        return r * self.graph.n + s

    def neighbors(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n_vars)]
        for (i, j), q in self.quadratic.items():
            adj[i].append((j, q))
            adj[j].append((i, q))
        return adj

    def dumps(self) -> str:
        lines = [f"# offset {self.offset!r}", f"# penalty {self.penalty_weight!r}"]
        for i in sorted(self.linear):
            lines.append(f"{i} {i} {self.linear[i]!r}")
        for (i, j) in sorted(self.quadratic):
            lines.append(f"{i} {j} {self.quadratic[i, j]!r}")
        return "\n".join(lines) + "\n"


def penalty_weight(graph: JoinGraph) -> float:
    w_rel = sum(math.log2(r.cardinality) for r in graph.relations)
    w_edge = sum(abs(math.log2(e.selectivity)) for e in graph.edges)
    return graph.n * (w_rel + w_edge) + 1.0


def build_qubo(graph: JoinGraph) -> Qubo:
    """One-hot QUBO whose valid-assignment energy is the log2 product of prefix cardinalities.

    Prefix membership of relation r after position s is the sum of x[r, t]
    for t <= s, so a prefix-ending position s covers every variable placed at
    t <= s. Summing over the n-1 prefixes of length >= 2 gives each variable
    x[r, t] a multiplicity of ``n - max(t, 1)``, and each pair x[u, t], x[v, t']
    of ``n - max(t, t', 1)``.
    """
    n = graph.n
    if n < 1:
        raise EmptyGraph("cannot encode an instance with no relations")
    if n < 2:
        raise TooSmall("a QUBO needs at least two relations")

    def idx(r, s):
        return r * n + s

    linear = {i: 0.0 for i in range(n * n)}
    quadratic: dict[tuple[int, int], float] = {}

    def add_q(i, j, value):
        key = (i, j) if i < j else (j, i)
        quadratic[key] = quadratic.get(key, 0.0) + value

    for r, rel in enumerate(graph.relations):
        w = math.log2(rel.cardinality)
        for t in range(n):
            linear[idx(r, t)] += w * (n - max(t, 1))
    for e in graph.edges:
        u, v = graph.index[e.left], graph.index[e.right]
        w = math.log2(e.selectivity)
        for t in range(n):
            for t2 in range(n):
                add_q(idx(u, t), idx(v, t2), w * (n - max(t, t2, 1)))

    # (1 - sum x)^2 = 1 - sum x + 2 sum_{a<b} x_a x_b for binary x, once per row and per column.
    P = penalty_weight(graph)
    for i in range(n * n):
        linear[i] -= 2 * P
    for k in range(n):
        row = [idx(k, s) for s in range(n)]
        col = [idx(r, k) for r in range(n)]
        for group in (row, col):
            for a, b in combinations(group, 2):
                add_q(a, b, 2 * P)

    return Qubo(graph, linear, quadratic, offset=2 * n * P, penalty_weight=P)


def _check_length(qubo: Qubo, x: Sequence[int]):
    if len(x) != qubo.n_vars:
        raise LengthMismatch(f"assignment has {len(x)} bits, model has {qubo.n_vars}")


def qubo_energy(qubo: Qubo, x: Sequence[int]) -> float:
    _check_length(qubo, x)
    energy = qubo.offset
    for i, c in qubo.linear.items():
        if x[i]:
            energy += c
    for (i, j), c in qubo.quadratic.items():
        if x[i] and x[j]:
            energy += c
    return energy


def encode_order(qubo: Qubo, order: Sequence[str]) -> list[int]:
    positions = order_positions(qubo.graph, order)
    x = [0] * qubo.n_vars
    for s, r in enumerate(positions):
        x[qubo.idx(r, s)] = 1
    return x


@dataclass(frozen=True)
class ViolationReport:
    """One-hot constraints an assignment breaks.

    ``rows`` maps an alias to the number of positions it occupies and
    ``columns`` maps a position to the number of relations placed there; only
    entries different from 1 are listed. ``conflicts`` names, for each
    over-full position, the aliases competing for it.
    """

    rows: dict[str, int]
    columns: dict[int, int]
    conflicts: dict[int, list[str]]

    @property
    def count(self) -> int:
        return len(self.rows) + len(self.columns)


def decode(qubo: Qubo, x: Sequence[int]) -> Union[list[str], ViolationReport]:
    _check_length(qubo, x)
    n, aliases = qubo.n, qubo.graph.aliases
    rows = {aliases[r]: sum(1 for s in range(n) if x[qubo.idx(r, s)]) for r in range(n)}
    columns = {s: sum(1 for r in range(n) if x[qubo.idx(r, s)]) for s in range(n)}
    bad_rows = {a: c for a, c in rows.items() if c != 1}
    bad_cols = {s: c for s, c in columns.items() if c != 1}
    if bad_rows or bad_cols:
        conflicts = {
            s: [aliases[r] for r in range(n) if x[qubo.idx(r, s)]]
            for s, c in bad_cols.items() if c > 1
        }
        return ViolationReport(bad_rows, bad_cols, conflicts)
    order: list[Optional[str]] = [None] * n
    for r in range(n):
        for s in range(n):
            if x[qubo.idx(r, s)]:
                order[s] = aliases[r]
    return order  # type: ignore[return-value]
