"""Simulated annealing over join orders and over one-hot QUBO assignments.

Both searches share one contract: ``restarts`` independent Metropolis runs,
restart k seeded with ``seed + k``, geometric cooling once per sweep, and a
best-of merge ordered by objective with a deterministic tie-break. Restarts may run on a
thread pool; the merge makes the result independent of the worker count.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from q2o.encoders import (
    Objective,
    PermutationModel,
    Qubo,
    decode,
    qubo_energy,
)
from q2o.errors import ConfigError, EmptyGraph

AUTO_SAMPLES = 100
SWEEPS_PER_RELATION = 200


@dataclass(frozen=True)
class SolverConfig:
    seed: int = 0
    restarts: int = 16
    sweeps: Optional[int] = None  # None: 200 * n
    t_initial: Optional[float] = None  # None: mean |delta| of 100 random moves
    cooling_alpha: float = 0.95
    time_budget_ms: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.sweeps is not None and self.sweeps < 1:
            raise ConfigError("sweeps must be >= 1")
        if self.t_initial is not None and not self.t_initial > 0:
            raise ConfigError("t_initial must be > 0")
        if not 0.0 < self.cooling_alpha < 1.0:
            raise ConfigError("cooling_alpha must lie in (0, 1)")
        if self.time_budget_ms is not None and self.time_budget_ms < 0:
            raise ConfigError("time_budget_ms must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def sweeps_for(self, n: int) -> int:
        return self.sweeps if self.sweeps is not None else SWEEPS_PER_RELATION * max(n, 1)


@dataclass(frozen=True)
class Solution:
    order: tuple[str, ...]
    objective: float
    wall_time_ms: float
    solver_id: str
    restarts_used: int = 1
    valid: bool = True


def _accept(delta: float, temperature: float, rng: random.Random) -> bool:
    if delta != delta:  # inf - inf: both states infeasible, treat as a neutral move
        delta = 0.0
    if delta <= 0.0:
        return True
    return rng.random() < math.exp(-delta / temperature)


def _auto_temperature(deltas: Sequence[float]) -> float:
    finite = [abs(d) for d in deltas if math.isfinite(d)]
    t = sum(finite) / len(finite) if finite else 0.0
    return t if t > 0.0 else 1.0


def _run_restarts(worker: Callable[[int], tuple], restarts: int, workers: int,
                  deadline: Optional[float]) -> list[tuple]:
    def guarded(k):
        # Restart 0 always runs; later ones are skipped once the budget is spent.
        if k > 0 and deadline is not None and time.perf_counter() >= deadline:
            return None
        return worker(k)

    if workers == 1:
        results = [guarded(k) for k in range(restarts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(guarded, range(restarts)))
    return [r for r in results if r is not None]


# ---------------------------------------------------------------- permutations

def _propose(perm: list[int], rnd: Callable[[], float]) -> list[int]:
    """Adjacent swap, random pair swap or single-element insertion, chosen uniformly."""
    n = len(perm)
    cand = perm[:]
    u = rnd() * 3.0
    if u < 1.0:
        i = int(rnd() * (n - 1))
        cand[i], cand[i + 1] = cand[i + 1], cand[i]
        return cand
    i = int(rnd() * n)
    j = int(rnd() * (n - 1))
    if j >= i:
        j += 1
    if u < 2.0:
        cand[i], cand[j] = cand[j], cand[i]
    else:
        cand.insert(j, cand.pop(i))
    return cand


def _anneal_permutation(model: PermutationModel, config: SolverConfig, k: int,
                        deadline: Optional[float]) -> tuple[float, int, list[int]]:
    rng = random.Random(config.seed + k)
    rnd = rng.random
    n = model.n
    aliases = model.graph.aliases
    perm = list(range(n))
    rng.shuffle(perm)
    if n < 2:
        return 0.0, k, perm

    evaluate = model.search_evaluator()
    cur = evaluate(perm)
    best, best_perm = cur, perm

    if config.t_initial is not None:
        temp = config.t_initial
    else:
        temp = _auto_temperature([evaluate(_propose(perm, rnd)) - cur for _ in range(AUTO_SAMPLES)])

    def key(p):
        return [aliases[i] for i in p]

    alpha = config.cooling_alpha
    exp = math.exp
    for _ in range(config.sweeps_for(n)):
        for _ in range(n):
            cand = _propose(perm, rnd)
            new = evaluate(cand)
            delta = new - cur
            if delta != delta:  # inf - inf: both infeasible, a neutral move
                delta = 0.0
            if delta <= 0.0 or rnd() < exp(-delta / temp):
                perm, cur = cand, new
                if cur < best or (cur == best and key(perm) < key(best_perm)):
                    best, best_perm = cur, perm
        temp = max(temp * alpha, 1e-300)
        if deadline is not None and time.perf_counter() >= deadline:
            break
    return best, k, best_perm


def solve_permutation_sa(model: PermutationModel, config: SolverConfig = SolverConfig()) -> Solution:
    """Anneal over left-deep join orders and return the best order found over all restarts.

    Restart results merge by objective, then alias sequence, then restart index.
    """
    if model.n < 1:
        raise EmptyGraph("nothing to order")
    start = time.perf_counter()
    deadline = None if config.time_budget_ms is None else start + config.time_budget_ms / 1000.0
    results = _run_restarts(lambda k: _anneal_permutation(model, config, k, deadline),
                            config.restarts, config.workers, deadline)
    aliases = model.graph.aliases
    scored = [(model.evaluate_positions(p), [aliases[i] for i in p], k) for _, k, p in results]
    objective, order, _ = min(scored)
    return Solution(
        order=tuple(order),
        objective=objective,
        wall_time_ms=(time.perf_counter() - start) * 1000.0,
        solver_id=f"sa-permutation/{model.objective.value}",
        restarts_used=len(results),
    )


# ---------------------------------------------------------------- QUBO

def _anneal_qubo(qubo: Qubo, adj, linear: list[float], config: SolverConfig, k: int,
                 deadline: Optional[float]) -> tuple[float, int, list[int]]:
    rng = random.Random(config.seed + k)
    n_vars = qubo.n_vars
    x = [int(rng.random() < 0.5) for _ in range(n_vars)]
    # field[i] = linear[i] + sum_j q_ij x_j, so flipping i changes energy by (1 - 2 x_i) * field[i]
    field = linear[:]
    for i in range(n_vars):
        if x[i]:
            for j, q in adj[i]:
                field[j] += q
    energy = qubo_energy(qubo, x)
    best, best_x = energy, x[:]

    if config.t_initial is not None:
        temp = config.t_initial
    else:
        temp = _auto_temperature([(1 - 2 * x[i]) * field[i]
                                  for i in (rng.randrange(n_vars) for _ in range(AUTO_SAMPLES))])

    alpha = config.cooling_alpha
    for _ in range(config.sweeps_for(qubo.n)):
        for _ in range(n_vars):
            i = rng.randrange(n_vars)
            delta = (1 - 2 * x[i]) * field[i]
            if _accept(delta, temp, rng):
                step = 1 - 2 * x[i]
                x[i] ^= 1
                for j, q in adj[i]:
                    field[j] += step * q
                energy += delta
                if energy < best:
                    best, best_x = energy, x[:]
        temp = max(temp * alpha, 1e-300)
        if deadline is not None and time.perf_counter() >= deadline:
            break
    return qubo_energy(qubo, best_x), k, best_x


def _qubo_runs(qubo: Qubo, config: SolverConfig) -> list[tuple[float, int, list[int]]]:
    start = time.perf_counter()
    deadline = None if config.time_budget_ms is None else start + config.time_budget_ms / 1000.0
    adj = qubo.neighbors()
    linear = [qubo.linear.get(i, 0.0) for i in range(qubo.n_vars)]
    return _run_restarts(lambda k: _anneal_qubo(qubo, adj, linear, config, k, deadline),
                         config.restarts, config.workers, deadline)


def solve_qubo_sa(qubo: Qubo, config: SolverConfig = SolverConfig()) -> tuple[list[int], float]:
    """Single-bit-flip annealing; returns the lowest-energy assignment seen and its exact energy."""
    energy, _, x = min(_qubo_runs(qubo, config), key=lambda r: (r[0], r[1]))
    return x, energy


def repair(qubo: Qubo, x: Sequence[int]) -> list[str]:
    """Turn any assignment into a permutation.

    Valid permutation matrices decode unchanged. Otherwise positions are
    filled left to right, each taking the still-unplaced relation with the
    highest bit at that position, ties going to the smallest alias.
    """
    decoded = decode(qubo, x)
    if isinstance(decoded, list):
        return decoded
    aliases = qubo.graph.aliases
    remaining = set(range(qubo.n))
    order = []
    for s in range(qubo.n):
        r = min(remaining, key=lambda r: (-x[qubo.idx(r, s)], aliases[r]))
        remaining.remove(r)
        order.append(aliases[r])
    return order


def solve_qubo(qubo: Qubo, config: SolverConfig = SolverConfig()) -> Solution:
    """Sample the QUBO, repair the best assignment and score the order with the log-product surrogate."""
    start = time.perf_counter()
    runs = _qubo_runs(qubo, config)
    _, _, x = min(runs, key=lambda r: (r[0], r[1]))
    valid = isinstance(decode(qubo, x), list)
    order = repair(qubo, x)
    model = PermutationModel(qubo.graph, Objective.LOGPRODUCT)
    return Solution(
        order=tuple(order),
        objective=model.evaluate(order),
        wall_time_ms=(time.perf_counter() - start) * 1000.0,
        solver_id="sa-qubo/logproduct",
        restarts_used=len(runs),
        valid=valid,
    )
