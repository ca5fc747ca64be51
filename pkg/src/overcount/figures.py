"""Chart rendering for trend reports.

Figures are written next to the delimited outputs so a report directory is
self-contained. Only statistical charts are drawn here; no imagery or map
rendering happens anywhere in the pipeline.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import TrendReport


def render_trend_figure(report: TrendReport, path: str | Path) -> None:
    """Draw per-location yearly averages and change ratios to an image file."""
    locations = [row.location_id for row in report.rows]
    positions = range(len(locations))
    width = 0.38

    fig, (ax_counts, ax_change) = plt.subplots(
        2, 1, figsize=(max(6.0, 1.1 * len(locations) + 2.0), 7.0), sharex=True
    )

    ax_counts.bar(
        [p - width / 2 for p in positions],
        [row.avg_count_a for row in report.rows],
        width=width,
        label=str(report.year_a),
        color="#4878d0",
    )
    ax_counts.bar(
        [p + width / 2 for p in positions],
        [row.avg_count_b for row in report.rows],
        width=width,
        label=str(report.year_b),
        color="#ee854a",
    )
    ax_counts.set_ylabel("average vehicles per scene")
    ax_counts.legend()
    ax_counts.grid(axis="y", alpha=0.3)

    ratios = [row.change_ratio for row in report.rows]
    ax_change.bar(
        list(positions),
        ratios,
        width=0.6,
        color=["#d65f5f" if r < 0 else "#6acc64" for r in ratios],
    )
    ax_change.axhline(0.0, color="black", linewidth=0.8)
    ax_change.axhline(
        report.overall_change_ratio,
        color="#4878d0",
        linestyle="--",
        linewidth=1.2,
        label=f"overall {report.overall_change_ratio:+.1%}",
    )
    ax_change.set_ylabel("change ratio")
    ax_change.set_xticks(list(positions))
    ax_change.set_xticklabels(locations, rotation=30, ha="right")
    ax_change.legend()
    ax_change.grid(axis="y", alpha=0.3)

    fig.suptitle(
        f"Vehicle counts, {report.year_a} vs {report.year_b} "
        f"(overall change {report.overall_change_ratio:+.1%})"
    )
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
