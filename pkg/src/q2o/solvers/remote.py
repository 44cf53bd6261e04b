"""The remote-solver boundary.

A :class:`RemoteSolver` takes a permutation model and a time budget and
returns a :class:`Solution` whose ``wall_time_ms`` covers the whole round
trip. Two endpoints ship with the package: ``local`` runs the annealer
in-process under the budget, and ``stub`` replays canned answers after a
simulated service latency.
"""

from __future__ import annotations

import json
import logging
import math
import time
from typing import Callable, Mapping, Optional, Protocol, Union

from q2o.encoders import PermutationModel
from q2o.errors import EndpointUnavailable, NotAPermutation, ReplayMissing
from q2o.solvers.annealing import Solution, SolverConfig, solve_permutation_sa

log = logging.getLogger(__name__)

DEFAULT_STUB_LATENCY_MS = 2800.0


class RemoteSolver(Protocol):
    name: str

    def solve(self, model: PermutationModel, budget_ms: float) -> Solution:
        ...


class LocalSolver:
    name = "local"

    def __init__(self, config: SolverConfig = SolverConfig()):
        self.config = config

    def solve(self, model: PermutationModel, budget_ms: float) -> Solution:
        start = time.perf_counter()
        cfg = SolverConfig(**{**self.config.__dict__, "time_budget_ms": budget_ms})
        sol = solve_permutation_sa(model, cfg)
        return Solution(sol.order, sol.objective, (time.perf_counter() - start) * 1000.0,
                        "remote/local", sol.restarts_used, sol.valid)


class StubSolver:
    """Replays recorded solutions keyed by instance name.

    Replay entries look like ``{"order": [...], "objective": 1.0,
    "simulated_latency_ms": 2530.22}``; entries without a latency use
    ``latency_ms``. ``sleep`` and ``clock`` are injectable so tests can run
    without real waiting.
    """

    name = "stub"

    def __init__(self, replay: Mapping[str, dict], latency_ms: float = DEFAULT_STUB_LATENCY_MS,
                 sleep: Callable[[float], None] = time.sleep,
                 clock: Callable[[], float] = time.perf_counter):
        self.replay = dict(replay)
        self.latency_ms = latency_ms
        self.sleep = sleep
        self.clock = clock

    @classmethod
    def from_file(cls, path, **kwargs) -> "StubSolver":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise EndpointUnavailable(f"cannot read replay file {path}: {exc}") from None
        if not text.strip():
            return cls({}, **kwargs)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise EndpointUnavailable(f"replay file {path} is not JSON: {exc}") from None
        if not isinstance(data, dict):
            raise EndpointUnavailable(f"replay file {path} must map instance names to entries")
        return cls(data, **kwargs)

    def solve(self, model: PermutationModel, budget_ms: float) -> Solution:
        name = model.graph.name
        entry = self.replay.get(name)
        if entry is None:
            raise ReplayMissing(f"no replay entry for instance {name!r}")
        start = self.clock()
        self.sleep(float(entry.get("simulated_latency_ms", self.latency_ms)) / 1000.0)
        order = tuple(entry["order"])
        try:
            objective = model.evaluate(order)
        except NotAPermutation as exc:
            raise ReplayMissing(f"replay entry for {name!r} does not fit the instance: {exc}") from None
        recorded = entry.get("objective")
        if recorded is not None and not math.isclose(recorded, objective, rel_tol=1e-9):
            log.warning("replayed objective %r for %s differs from re-evaluation %r", recorded, name, objective)
        return Solution(order, objective, (self.clock() - start) * 1000.0, "remote/stub", 1, True)


def make_remote(name: str, config: SolverConfig = SolverConfig(), replay: Optional[Union[str, Mapping]] = None,
                latency_ms: float = DEFAULT_STUB_LATENCY_MS) -> RemoteSolver:
    if name == "local":
        return LocalSolver(config)
    if name == "stub":
        if replay is None:
            raise EndpointUnavailable("the stub endpoint needs a replay file")
        if isinstance(replay, Mapping):
            return StubSolver(replay, latency_ms)
        return StubSolver.from_file(replay, latency_ms=latency_ms)
    raise EndpointUnavailable(f"unknown remote endpoint {name!r}")


def remote_solve(model: PermutationModel, budget_ms: float, endpoint: RemoteSolver) -> Solution:
    if endpoint is None:
        raise EndpointUnavailable("no remote endpoint configured")
    return endpoint.solve(model, budget_ms)
