import io
import math

import pytest

from q2o.errors import EmptyInput, MalformedCsv, ZeroComponent
from q2o.pgclient import LatencyBreakdown
from q2o.report import (
    CSV_HEADER,
    GainRow,
    ReportRow,
    aggregate,
    compute_gains,
    dumps_csv,
    read_csv,
    sort_for_report,
)

# Published per-query latency components (ms).
PUBLISHED = {
    "q21": (1.00, 3581.40, 2.24, 272.35, 2530.22),
    "q60": (3.14, 10951.31, 8.31, 6010.00, 2748.32),
    "q62": (3.17, 4680.26, 9.03, 429.58, 2854.31),
    "q63": (1.16, 4846.42, 9.02, 585.60, 2816.42),
}
EXEC_GAINS = {"q21": 13.15, "q60": 1.82, "q62": 10.89, "q63": 8.28}
E2E_GAINS = {"q21": 1.28, "q60": 1.25, "q62": 1.42, "q63": 1.42}


def breakdown(q, honored=True):
    return LatencyBreakdown(q, *PUBLISHED[q], hint_honored=honored)


@pytest.mark.parametrize("q", sorted(PUBLISHED))
def test_published_gains(q):
    g = compute_gains(breakdown(q))
    assert round(g.exec_gain, 2) == pytest.approx(EXEC_GAINS[q], abs=0.01)
    assert round(g.e2e_gain, 2) == pytest.approx(E2E_GAINS[q], abs=0.01)


def test_q21_reduction():
    g = compute_gains(breakdown("q21"))
    assert g.reduction_pct == pytest.approx(92.40, abs=0.01)
    assert g.reduction_pct == pytest.approx(100 * (1 - 272.35 / 3581.40))


def test_identity_case():
    b = LatencyBreakdown("x", 2.0, 100.0, 2.0, 100.0, 0.0)
    g = compute_gains(b)
    assert g.exec_gain == 1.0 and g.e2e_gain == 1.0 and g.reduction_pct == 0.0


def test_zero_component():
    with pytest.raises(ZeroComponent):
        compute_gains(LatencyBreakdown("x", 1.0, 0.0, 1.0, 1.0, 1.0))


def test_aggregate_published():
    rep = aggregate([compute_gains(breakdown(q)) for q in PUBLISHED])
    # hand arithmetic: 1 - hinted/baseline for each column
    reductions = [100 * (1 - h / b) for (_, b, _, h, _) in PUBLISHED.values()]
    assert [round(r, 2) for r in reductions] == [92.40, 45.12, 90.82, 87.92]
    assert rep.total_queries == 4 and rep.improved_count == 4
    assert rep.max_reduction_pct == pytest.approx(92.40, abs=0.01)
    assert rep.avg_reduction_pct == pytest.approx(79.06, abs=0.01)
    assert rep.line() == "queries=4 improved=4 max_reduction_pct=92.40 avg_reduction_pct=79.06"


def test_aggregate_no_improvement():
    rep = aggregate([GainRow("x", 0.5, 0.4, -100.0)])
    assert rep.improved_count == 0 and not rep.has_improvement
    assert rep.max_reduction_pct == 0.0 and rep.avg_reduction_pct == 0.0
    assert rep.line().endswith("(no improved queries)")
    with pytest.raises(EmptyInput):
        aggregate([])


def test_csv_round_trip():
    rows = [ReportRow(q, breakdown(q), compute_gains(breakdown(q))) for q in sorted(PUBLISHED)]
    rows.append(ReportRow("q99", error="QueryTimeout: too slow"))
    text = dumps_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert text.splitlines()[0] == ("query,pg_planning_ms,pg_exec_ms,hint_planning_ms,hint_exec_ms,"
                                    "solver_ms,hint_honored,exec_gain,e2e_gain,reduction_pct,error")
    back = read_csv(io.StringIO(text))
    assert [r.query for r in back] == [r.query for r in rows]
    for a, b in zip(back, rows):
        assert a.breakdown == b.breakdown
        assert a.error == b.error
        if a.gains:
            assert math.isclose(a.gains.exec_gain, b.gains.exec_gain, rel_tol=1e-15)
    assert dumps_csv(back) == text


def test_csv_missing_column():
    with pytest.raises(MalformedCsv):
        read_csv(io.StringIO("query,pg_exec_ms\nq1,3\n"))
    with pytest.raises(MalformedCsv):
        read_csv(io.StringIO(""))


def test_sort_is_stable_with_query_tiebreak():
    b = LatencyBreakdown("b", 1, 10, 1, 5, 1)
    a = LatencyBreakdown("a", 1, 10, 1, 5, 1)
    c = LatencyBreakdown("c", 1, 30, 1, 5, 1)
    rows = [ReportRow(x.query, x, compute_gains(x)) for x in (b, a, c)]
    assert [r.query for r in sort_for_report(rows)] == ["c", "a", "b"]


def _svg_rects(path):
    import xml.etree.ElementTree as ET
    root = ET.parse(path).getroot()
    ns = "{http://www.w3.org/2000/svg}"
    return root, [g for g in root.iter(ns + "g") if (g.get("id") or "").startswith("patch_")]


def test_execution_bars_svg(tmp_path):
    from q2o.plotting import execution_bars
    rows = sort_for_report(ReportRow(q, breakdown(q), compute_gains(breakdown(q))) for q in PUBLISHED)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    execution_bars(rows, a)
    execution_bars(rows, b)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    for q in PUBLISHED:
        assert f">{q}<" in text
    # background + axes patch + 8 bars + 2 legend swatches, give or take the frame
    _, patches = _svg_rects(a)
    assert len(patches) >= 8


def test_execution_bars_single_row(tmp_path):
    from q2o.plotting import execution_bars
    out = tmp_path / "one.svg"
    execution_bars([ReportRow("q21", breakdown("q21"), compute_gains(breakdown("q21")))], out)
    assert ">q21<" in out.read_text()
