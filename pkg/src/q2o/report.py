"""Speedup arithmetic and the benchmark report CSV."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from q2o.errors import EmptyInput, MalformedCsv, ZeroComponent
from q2o.pgclient import LatencyBreakdown

CSV_HEADER = (
    "query", "pg_planning_ms", "pg_exec_ms", "hint_planning_ms", "hint_exec_ms", "solver_ms",
    "hint_honored", "exec_gain", "e2e_gain", "reduction_pct", "error",
)


@dataclass(frozen=True)
class GainRow:
    query: str
    exec_gain: float
    e2e_gain: float
    reduction_pct: float


@dataclass(frozen=True)
class AggregateReport:
    total_queries: int
    improved_count: int
    max_reduction_pct: float
    avg_reduction_pct: float

    @property
    def has_improvement(self) -> bool:
        return self.improved_count > 0

    def line(self) -> str:
        text = (f"queries={self.total_queries} improved={self.improved_count} "
                f"max_reduction_pct={self.max_reduction_pct:.2f} avg_reduction_pct={self.avg_reduction_pct:.2f}")
        if not self.has_improvement:
            text += " (no improved queries)"
        return text


def compute_gains(b: LatencyBreakdown) -> GainRow:
    """Execution and end-to-end speedups of the hinted pipeline over the baseline."""
    parts = {
        "pg_planning_ms": b.pg_planning_ms, "pg_execution_ms": b.pg_execution_ms,
        "hint_planning_ms": b.hint_planning_ms, "hint_execution_ms": b.hint_execution_ms,
    }
    for name, value in parts.items():
        if not value > 0:
            raise ZeroComponent(f"{b.query}: {name} must be > 0, got {value!r}")
    if b.solver_ms < 0:
        raise ZeroComponent(f"{b.query}: solver_ms must be >= 0, got {b.solver_ms!r}")
    exec_gain = b.pg_execution_ms / b.hint_execution_ms
    e2e_gain = (b.pg_planning_ms + b.pg_execution_ms) / (b.hint_planning_ms + b.hint_execution_ms + b.solver_ms)
    reduction = 100.0 * (1.0 - b.hint_execution_ms / b.pg_execution_ms)
    return GainRow(b.query, exec_gain, e2e_gain, reduction)


def aggregate(rows: Sequence[GainRow]) -> AggregateReport:
    """Count improved queries (exec_gain > 1) and summarize their latency reductions."""
    if not rows:
        raise EmptyInput("no rows to aggregate")
    improved = [r.reduction_pct for r in rows if r.exec_gain > 1.0]
    if not improved:
        return AggregateReport(len(rows), 0, 0.0, 0.0)
    return AggregateReport(len(rows), len(improved), max(improved), math.fsum(improved) / len(improved))


@dataclass(frozen=True)
class ReportRow:
    """One CSV line: the latency breakdown plus derived gains, or an error."""

    query: str
    breakdown: Optional[LatencyBreakdown] = None
    gains: Optional[GainRow] = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.breakdown is not None and self.gains is not None and not self.error


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(rows: Iterable[ReportRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        if r.breakdown is None or r.gains is None:
            w.writerow([r.query] + [""] * 9 + [r.error])
            continue
        b, g = r.breakdown, r.gains
        w.writerow([
            r.query, _fmt(b.pg_planning_ms), _fmt(b.pg_execution_ms), _fmt(b.hint_planning_ms),
            _fmt(b.hint_execution_ms), _fmt(b.solver_ms), "true" if b.hint_honored else "false",
            _fmt(g.exec_gain), _fmt(g.e2e_gain), _fmt(g.reduction_pct), r.error,
        ])


def dumps_csv(rows: Iterable[ReportRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def _parse_bool(text: str, where: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "t"):
        return True
    if t in ("false", "0", "no", "f"):
        return False
    raise MalformedCsv(f"{where}: expected a boolean, got {text!r}")


def read_csv(fh) -> list[ReportRow]:
    """Parse a report CSV. Gains are recomputed from the timing columns, not trusted from the file."""
    reader = csv.DictReader(fh)
    if reader.fieldnames is None:
        raise MalformedCsv("empty CSV")
    missing = [c for c in CSV_HEADER if c not in reader.fieldnames]
    if missing:
        raise MalformedCsv(f"missing column(s): {', '.join(missing)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        query = (rec["query"] or "").strip()
        if not query:
            raise MalformedCsv(f"line {lineno}: empty query id")
        error = (rec["error"] or "").strip()
        if error or not (rec["pg_exec_ms"] or "").strip():
            rows.append(ReportRow(query, error=error or "no timings"))
            continue
        try:
            b = LatencyBreakdown(
                query,
                float(rec["pg_planning_ms"]), float(rec["pg_exec_ms"]),
                float(rec["hint_planning_ms"]), float(rec["hint_exec_ms"]),
                float(rec["solver_ms"]),
                _parse_bool(rec["hint_honored"], f"line {lineno}"),
            )
        except (TypeError, ValueError) as exc:
            raise MalformedCsv(f"line {lineno}: {exc}") from None
        rows.append(ReportRow(query, b, compute_gains(b)))
    return rows


def sort_for_report(rows: Iterable[ReportRow]) -> list[ReportRow]:
    """Successful rows by exec_gain descending, query id breaking ties."""
    ok = [r for r in rows if r.ok]
    return sorted(ok, key=lambda r: (-r.gains.exec_gain, r.query))
