"""Figures for benchmark reports."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from q2o.report import ReportRow  # noqa: E402

BASELINE_COLOR = "#7f7f7f"
HINTED_COLOR = "#1f77b4"


def report_style():
    """rc overrides for report figures; byte-stable SVG output needs a fixed hash salt."""
    return {
        "svg.hashsalt": "q2o",
        "svg.fonttype": "none",
        "font.size": 10,
        "axes.spines.top": False,
        "axes.spines.right": False,
    }


def execution_bars(rows: Sequence[ReportRow], path, title: str = "Execution time per query") -> None:
    """Grouped bars of baseline vs hinted execution milliseconds, one group per query, in the given order."""
    with plt.rc_context(report_style()):
        width = max(4.0, 0.9 * len(rows) + 2.0)
        fig, ax = plt.subplots(figsize=(width, 3.6))
        xs = range(len(rows))
        base = [r.breakdown.pg_execution_ms for r in rows]
        hint = [r.breakdown.hint_execution_ms for r in rows]
        ax.bar([x - 0.2 for x in xs], base, width=0.4, color=BASELINE_COLOR, label="PostgreSQL")
        ax.bar([x + 0.2 for x in xs], hint, width=0.4, color=HINTED_COLOR, label="hinted")
        ax.set_xticks(list(xs))
        ax.set_xticklabels([r.query for r in rows])
        ax.set_ylabel("execution time (ms)")
        ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
