"""PostgreSQL boundary: catalog cardinalities and EXPLAIN ANALYZE timings.

Functions take any DB-API style connection whose ``cursor()`` supports
``execute(sql, params)`` and ``fetchone()``/``fetchall()``; :func:`connect`
opens one with psycopg. Server errors are recognised by their SQLSTATE so
fakes used in tests only need a ``sqlstate`` attribute.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional

from q2o.errors import (
    ExplainParseError,
    NoSuchTable,
    PgConnectionError,
    QueryTimeout,
    SqlError,
)
from q2o.hints import PlanHint, leaves, prepend_hint

DEFAULT_STATEMENT_TIMEOUT_MS = 300_000

CARDINALITY_SQL = "SELECT reltuples FROM pg_class WHERE relname = %s"
EXPLAIN_PREFIX = "EXPLAIN (ANALYZE, FORMAT JSON) "

_QUERY_CANCELED = "57014"
_CONNECTION_CLASS = "08"


@dataclass(frozen=True)
class ConnectionSettings:
    host: str = "localhost"
    port: int = 5432
    database: str = "postgres"
    user: Optional[str] = None
    password: Optional[str] = field(default=None, repr=False)
    statement_timeout_ms: int = DEFAULT_STATEMENT_TIMEOUT_MS

    def __post_init__(self):
        if not 1 <= int(self.port) <= 65535:
            raise ValueError(f"port {self.port} outside [1, 65535]")

    @classmethod
    def from_env(cls, environ=None, **overrides) -> Optional["ConnectionSettings"]:
        """Settings from ``Q2O_PG_*`` variables, or None when no host/database is configured."""
        env = os.environ if environ is None else environ
        if not any(k in env for k in ("Q2O_PG_HOST", "Q2O_PG_DB")):
            return None
        kwargs = dict(
            host=env.get("Q2O_PG_HOST", "localhost"),
            port=int(env.get("Q2O_PG_PORT", "5432")),
            database=env.get("Q2O_PG_DB", "postgres"),
            user=env.get("Q2O_PG_USER"),
            password=env.get("Q2O_PG_PASSWORD"),
        )
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class TimedRun:
    planning_ms: float
    execution_ms: float
    plan_text: str = ""
    plan: Optional[dict] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class LatencyBreakdown:
    query: str
    pg_planning_ms: float
    pg_execution_ms: float
    hint_planning_ms: float
    hint_execution_ms: float
    solver_ms: float
    hint_honored: bool = True


def connect(settings: ConnectionSettings):
    try:
        import psycopg
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise PgConnectionError("psycopg is not installed; pip install 'psycopg[binary]'") from exc
    try:
        conn = psycopg.connect(
            host=settings.host, port=settings.port, dbname=settings.database,
            user=settings.user, password=settings.password, autocommit=True,
        )
    except psycopg.Error as exc:
        raise PgConnectionError(str(exc)) from exc
    with conn.cursor() as cur:
        cur.execute(f"SET statement_timeout = {int(settings.statement_timeout_ms)}")
    return conn


def _translate(exc: Exception) -> Exception:
    state = getattr(exc, "sqlstate", None) or getattr(exc, "pgcode", None)
    if state == _QUERY_CANCELED:
        return QueryTimeout(str(exc))
    if state and state.startswith(_CONNECTION_CLASS):
        return PgConnectionError(str(exc))
    if state is None and isinstance(exc, (ConnectionError, OSError)):
        return PgConnectionError(str(exc))
    return SqlError(str(exc))


def _run(conn, sql: str, params=None, fetch: str = "one"):
    try:
        cur = conn.cursor()
        try:
            cur.execute(sql, params) if params is not None else cur.execute(sql)
            return cur.fetchone() if fetch == "one" else cur.fetchall()
        finally:
            cur.close()
    except Exception as exc:
        if isinstance(exc, (QueryTimeout, PgConnectionError, SqlError)):
            raise
        raise _translate(exc) from exc


def fetch_cardinality(conn, table_name: str) -> float:
    row = _run(conn, CARDINALITY_SQL, (table_name,))
    if row is None:
        raise NoSuchTable(table_name)
    return max(float(row[0]), 1.0)


def parse_explain(document: Any) -> TimedRun:
    """Extract top-level planning/execution milliseconds from an EXPLAIN (FORMAT JSON) result."""
    if isinstance(document, (bytes, str)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ExplainParseError(f"EXPLAIN output is not JSON: {exc}") from None
    if isinstance(document, list):
        if not document:
            raise ExplainParseError("empty EXPLAIN document")
        document = document[0]
    if not isinstance(document, dict):
        raise ExplainParseError("EXPLAIN document is not an object")
    try:
        planning = float(document["Planning Time"])
        execution = float(document["Execution Time"])
    except KeyError as exc:
        raise ExplainParseError(f"EXPLAIN output lacks {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ExplainParseError(f"bad timing value: {exc}") from None
    if not (math.isfinite(planning) and math.isfinite(execution)) or planning < 0 or execution < 0:
        raise ExplainParseError("timings must be finite and non-negative")
    plan = document.get("Plan")
    return TimedRun(planning, execution, json.dumps(plan, indent=1) if plan else "", plan)


def explain_analyze(conn, sql: str) -> TimedRun:
    row = _run(conn, EXPLAIN_PREFIX + sql)
    if row is None:
        raise ExplainParseError("EXPLAIN returned no rows")
    return parse_explain(row[0])


def warm_up(conn, sql: str) -> None:
    """Execute the query once and discard the result, to populate caches before timing."""
    _run(conn, sql, fetch="all")


def plan_leaves(plan: Optional[dict]) -> list[str]:
    """Relation aliases of a plan tree in left-to-right (outer before inner) order.

    Scan nodes are leaves; InitPlan/SubPlan children are not part of the join tree.
    """
    if not plan:
        return []
    if "Alias" in plan or "Relation Name" in plan:
        return [plan.get("Alias") or plan["Relation Name"]]
    out = []
    for child in plan.get("Plans", []):
        if child.get("Parent Relationship") in ("InitPlan", "SubPlan"):
            continue
        out.extend(plan_leaves(child))
    return out


def run_pair(conn, sql: str, hint: PlanHint, solver_ms: float, query: str = "") -> LatencyBreakdown:
    """Time the bare query, then the hinted one; exactly two EXPLAIN statements, baseline first.

    If either run fails the exception propagates and nothing is returned.
    """
    baseline = explain_analyze(conn, sql)
    hinted = explain_analyze(conn, prepend_hint(sql, hint))
    honored = plan_leaves(hinted.plan) == leaves(hint.tree)
    return LatencyBreakdown(
        query=query,
        pg_planning_ms=baseline.planning_ms,
        pg_execution_ms=baseline.execution_ms,
        hint_planning_ms=hinted.planning_ms,
        hint_execution_ms=hinted.execution_ms,
        solver_ms=float(solver_ms),
        hint_honored=honored,
    )
