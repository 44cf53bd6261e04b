"""Command-line entry points: ``q2o optimize``, ``q2o bench`` and ``q2o report``.

Exit codes: 0 success, 2 input error, 3 solver error, 4 benchmark produced no
successful query.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional

from q2o.costmodel import plan_cost_cout
from q2o.encoders import Objective, build_nl_model, build_qubo
from q2o.errors import InputError, MalformedInput, Q2OError, SolverError
from q2o.hints import JoinTree, emit_leading_hint, hint_for_order, leaves
from q2o.joingraph import ORACLE_LIMIT, JoinGraph, load_join_graph, validate
from q2o.pgclient import ConnectionSettings, LatencyBreakdown, connect, run_pair, warm_up
from q2o.report import (
    ReportRow,
    aggregate,
    compute_gains,
    read_csv,
    sort_for_report,
    write_csv,
)
from q2o.solvers import (
    Solution,
    SolverConfig,
    dp_bushy,
    dp_leftdeep,
    exhaustive,
    make_remote,
    remote_solve,
    solve_permutation_sa,
    solve_qubo,
)
from q2o.solvers.remote import DEFAULT_STUB_LATENCY_MS

log = logging.getLogger("q2o")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_NOTHING = 0, 2, 3, 4


def _num(x: float) -> str:
    return f"{x:.10g}"


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--encoder", choices=["nl", "qubo"], default="nl")
    p.add_argument("--solver", choices=["sa", "dp", "bushy", "exhaustive", "remote"], default="sa")
    p.add_argument("--objective", choices=[o.value for o in Objective], default="cout",
                   help="objective of the permutation model (the QUBO always uses logproduct)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--sweeps", type=int, default=None, help="sweeps per restart (default 200*n)")
    p.add_argument("--time-budget-ms", type=float, default=None)
    p.add_argument("--workers", type=int, default=1, help="threads running restarts")
    p.add_argument("--remote", choices=["local", "stub"], default="local")
    p.add_argument("--replay", help="replay file for the stub endpoint")
    p.add_argument("--simulated-latency-ms", type=float, default=DEFAULT_STUB_LATENCY_MS)
    p.add_argument("--strict-no-cross-products", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="q2o", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="solve one instance and print its join order and hint")
    p.add_argument("--graph", required=True)
    p.add_argument("--emit", choices=["full", "hint"], default="full")
    p.add_argument("--dump-qubo", help="write the QUBO coefficients to this file")
    _add_solver_args(p)

    p = sub.add_parser("bench", help="solve a workload and collect latency breakdowns")
    p.add_argument("--workload", required=True, help="directory of instance files")
    p.add_argument("--fixtures", help="offline mode: JSON timings per query instead of a live database")
    p.add_argument("--output", default="report.csv")
    p.add_argument("--warmup", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--statement-timeout-ms", type=int, default=300_000)
    _add_solver_args(p)

    p = sub.add_parser("report", help="render a bench CSV as a figure and print the aggregate")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="SVG path (default: next to the CSV)")
    return parser


def _config(args) -> SolverConfig:
    return SolverConfig(seed=args.seed, restarts=args.restarts, sweeps=args.sweeps,
                        time_budget_ms=args.time_budget_ms, workers=args.workers)


def solve_instance(graph: JoinGraph, args) -> tuple[Solution, Optional[JoinTree]]:
    """Solve per the solver flags; returns the solution and, for the bushy oracle, its tree."""
    strict = args.strict_no_cross_products
    if strict and not graph.is_connected():
        raise MalformedInput("disconnected: cross product required, rejected by --strict-no-cross-products")
    if args.solver in ("dp", "bushy", "exhaustive"):
        fn = {"dp": dp_leftdeep, "bushy": dp_bushy, "exhaustive": exhaustive}[args.solver]
        result, cost = fn(graph, allow_cross_products=not strict)
        if cost == float("inf"):
            raise SolverError("no plan without cross products exists")
        if args.solver == "bushy":
            tree = result
            order = tuple(leaves(tree))
            return Solution(order, cost, 0.0, "oracle/bushy"), tree
        return Solution(tuple(result), cost, 0.0, f"oracle/{args.solver}"), None

    config = _config(args)
    if args.encoder == "qubo":
        if args.solver != "sa":
            raise MalformedInput("the QUBO encoder is solved with --solver sa only")
        sol = solve_qubo(build_qubo(graph), config)
    else:
        model = build_nl_model(graph, args.objective, allow_cross_products=not strict)
        if args.solver == "remote":
            endpoint = make_remote(args.remote, config, args.replay, args.simulated_latency_ms)
            budget = args.time_budget_ms if args.time_budget_ms is not None else 1000.0
            sol = remote_solve(model, budget, endpoint)
        else:
            sol = solve_permutation_sa(model, config)
    if sol.objective == float("inf"):
        raise SolverError("solver found no plan without cross products")
    return sol, None


def cmd_optimize(args) -> int:
    graph = load_join_graph(args.graph)
    for w in validate(graph):
        log.warning("%s: %s", graph.name or args.graph, w)
    if args.dump_qubo:
        Path(args.dump_qubo).write_text(build_qubo(graph).dumps())

    sol, tree = solve_instance(graph, args)
    if graph.n < 2:
        hint_text = ""
    else:
        hint_text = (emit_leading_hint(tree) if tree is not None else hint_for_order(sol.order)).text
    log.info("solver %s took %.2f ms", sol.solver_id, sol.wall_time_ms)

    if args.emit == "hint":
        print(hint_text)
        return EXIT_OK

    cout = plan_cost_cout(graph, sol.order) if tree is None else sol.objective
    lines = [
        f"instance: {graph.name}",
        f"order: {','.join(sol.order)}",
        f"objective: {_num(sol.objective)} ({sol.solver_id})",
        f"cout: {_num(cout)}",
    ]
    if graph.n <= ORACLE_LIMIT:
        _, optimum = dp_leftdeep(graph, allow_cross_products=not args.strict_no_cross_products)
        gap = 100.0 * (cout - optimum) / optimum if optimum > 0 else 0.0
        lines += [f"dp_cout: {_num(optimum)}", f"gap_pct: {gap:.2f}"]
    else:
        lines.append(f"dp_cout: unavailable (oracle unavailable above n={ORACLE_LIMIT})")
    if args.encoder == "qubo" and args.solver == "sa":
        lines.append(f"valid: {'true' if sol.valid else 'false'}")
    lines.append(f"hint: {hint_text}")
    print("\n".join(lines))
    return EXIT_OK


_FIXTURE_FIELDS = ("pg_planning_ms", "pg_exec_ms", "hint_planning_ms", "hint_exec_ms")


def _fixture_breakdown(name: str, entry: dict, solver_ms: float) -> LatencyBreakdown:
    missing = [f for f in _FIXTURE_FIELDS if f not in entry]
    if missing:
        raise MalformedInput(f"fixture for {name} lacks {', '.join(missing)}")
    return LatencyBreakdown(
        query=name,
        pg_planning_ms=float(entry["pg_planning_ms"]),
        pg_execution_ms=float(entry["pg_exec_ms"]),
        hint_planning_ms=float(entry["hint_planning_ms"]),
        hint_execution_ms=float(entry["hint_exec_ms"]),
        solver_ms=float(entry.get("solver_ms", solver_ms)),
        hint_honored=bool(entry.get("hint_honored", True)),
    )


def cmd_bench(args) -> int:
    workload = Path(args.workload)
    if not workload.is_dir():
        raise MalformedInput(f"workload directory {workload} does not exist")
    files = sorted(workload.glob("*.json"))
    if not files:
        print("no instance files in workload", file=sys.stderr)
        return EXIT_NOTHING

    fixtures = None
    conn = None
    if args.fixtures:
        try:
            fixtures = json.loads(Path(args.fixtures).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedInput(f"cannot read fixtures: {exc}") from None
        if not isinstance(fixtures, dict):
            raise MalformedInput("fixtures must map query names to timing objects")
    else:
        settings = ConnectionSettings.from_env(statement_timeout_ms=args.statement_timeout_ms)
        if settings is None:
            raise MalformedInput("live mode needs Q2O_PG_HOST/Q2O_PG_DB (or pass --fixtures)")
        conn = connect(settings)

    rows = []
    checked = mismatched = 0
    try:
        for path in files:
            name = path.stem
            try:
                graph = load_join_graph(path)
                name = graph.name or name
                sol, tree = solve_instance(graph, args)
                hint = emit_leading_hint(tree) if tree is not None else hint_for_order(sol.order)
                if tree is None and graph.n <= ORACLE_LIMIT:
                    checked += 1
                    optimum = dp_leftdeep(graph, allow_cross_products=not args.strict_no_cross_products)[1]
                    if not math.isclose(plan_cost_cout(graph, sol.order), optimum, rel_tol=1e-9):
                        mismatched += 1
                if fixtures is not None:
                    if name not in fixtures:
                        raise MalformedInput(f"no fixture timings for {name}")
                    breakdown = _fixture_breakdown(name, fixtures[name], sol.wall_time_ms)
                else:
                    if not graph.sql:
                        raise MalformedInput(f"{name} has no sql text")
                    if args.warmup:
                        warm_up(conn, graph.sql)
                    breakdown = run_pair(conn, graph.sql, hint, sol.wall_time_ms, query=name)
                rows.append(ReportRow(name, breakdown, compute_gains(breakdown)))
            except (Q2OError, OSError) as exc:
                log.error("%s: %s", name, exc)
                rows.append(ReportRow(name, error=f"{type(exc).__name__}: {exc}"))
    finally:
        if conn is not None:
            conn.close()

    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        write_csv(rows, fh)
    ok = [r for r in rows if r.ok]
    if not ok:
        print(f"no query succeeded; report written to {args.output}", file=sys.stderr)
        return EXIT_NOTHING
    if not all(r.breakdown.hint_honored for r in ok):
        log.warning("%d of %d hints were not honored by the server",
                    sum(not r.breakdown.hint_honored for r in ok), len(ok))
    print(aggregate([r.gains for r in ok]).line())
    # Orders chosen under the log-product surrogate (or a heuristic) can miss the C_out optimum.
    print(f"cout_optimal={checked - mismatched}/{checked}")
    return EXIT_OK


def cmd_report(args) -> int:
    from q2o.plotting import execution_bars

    try:
        with open(args.input, newline="", encoding="utf-8") as fh:
            rows = read_csv(fh)
    except OSError as exc:
        raise MalformedInput(f"cannot read {args.input}: {exc}") from None
    ranked = sort_for_report(rows)
    if not ranked:
        raise MalformedInput("no successful rows to report")
    out = args.output or str(Path(args.input).with_suffix(".svg"))
    execution_bars(ranked, out)

    print(f"{'query':<12}{'exec_gain':>10}{'e2e_gain':>10}{'reduction_pct':>15}  honored")
    for r in ranked:
        g = r.gains
        print(f"{r.query:<12}{g.exec_gain:>10.2f}{g.e2e_gain:>10.2f}{g.reduction_pct:>15.2f}  "
              f"{'true' if r.breakdown.hint_honored else 'false'}")
    print(aggregate([r.gains for r in ranked]).line())
    print(f"figure: {out}")
    return EXIT_OK


COMMANDS = {"optimize": cmd_optimize, "bench": cmd_bench, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Q2OError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_SOLVER)


def run() -> None:
    sys.exit(main())
