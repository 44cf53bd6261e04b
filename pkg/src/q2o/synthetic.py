"""Seeded synthetic join graphs for solver evaluation."""

from __future__ import annotations

import random
from typing import Optional

from q2o.joingraph import JoinEdge, JoinGraph, Relation, build_graph

TOPOLOGIES = ("chain", "star", "clique", "random")


def _log_uniform(rng: random.Random, lo_exp: float, hi_exp: float) -> float:
    return 10.0 ** rng.uniform(lo_exp, hi_exp)


def random_graph(rng: random.Random, n: int, topology: str = "random", name: Optional[str] = None,
                 card_exp=(0.0, 6.0), sel_exp=(-4.0, 0.0), edge_prob: float = 0.3) -> JoinGraph:
    """Connected graph with log-uniform cardinalities and selectivities.

    ``random`` builds a random spanning tree then adds each remaining pair
    with probability ``edge_prob``.
    """
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}")
    aliases = [f"t{i}" for i in range(n)]
    relations = [Relation(a, f"table_{a}", _log_uniform(rng, *card_exp)) for a in aliases]
    pairs: list[tuple[int, int]] = []
    if topology == "chain":
        pairs = [(i, i + 1) for i in range(n - 1)]
    elif topology == "star":
        pairs = [(0, i) for i in range(1, n)]
    elif topology == "clique":
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        perm = list(range(n))
        rng.shuffle(perm)
        tree = {tuple(sorted((perm[k], perm[rng.randrange(k)]))) for k in range(1, n)}
        extra = {(i, j) for i in range(n) for j in range(i + 1, n)
                 if (i, j) not in tree and rng.random() < edge_prob}
        pairs = sorted(tree | extra)
    edges = [JoinEdge(aliases[i], aliases[j], _log_uniform(rng, *sel_exp)) for i, j in pairs]
    return build_graph(name or f"{topology}{n}", relations, edges)
