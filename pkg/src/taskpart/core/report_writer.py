"""Markdown/CSV comparison tables, run reports and the cluster scatter SVG."""

import csv
import io
import xml.etree.ElementTree as ET
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import BinaryIO

from taskpart.core.errors import DimensionMismatch, EmptyInput
from taskpart.core.statistics import summarize
from taskpart.models.features import FeatureMatrix
from taskpart.models.partition import Partition, PartitionMethod
from taskpart.models.report import ComparisonRow, ComparisonTable, EvalStats

PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#17becf",
)

SVG_WIDTH = 800
SVG_HEIGHT = 600
SVG_MARGIN = 0.05

NO_COUNT = "—"


def percent(value: float) -> str:
    return f"{value * 100:.1f}%"


def comparison_table(rows: Sequence[ComparisonRow]) -> ComparisonTable:
    """Agent / specialist count / average success, as Markdown and CSV."""
    if not rows:
        raise EmptyInput("comparison table needs at least one row")
    lines = [
        "| Agent | Number of Specialists | Average |",
        "| --- | --- | --- |",
    ]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["agent", "n_specialists", "average"])
    for row in rows:
        count = NO_COUNT if row.n_specialists is None else str(row.n_specialists)
        lines.append(f"| {row.label} | {count} | {percent(row.stats.average)} |")
        writer.writerow(
            [
                row.label,
                "" if row.n_specialists is None else row.n_specialists,
                repr(row.stats.average),
            ]
        )
    return ComparisonTable(markdown="\n".join(lines) + "\n", csv=buffer.getvalue())


def _scale(value: float, lo: float, hi: float, size: int, invert: bool) -> float:
    margin = size * SVG_MARGIN
    if hi == lo:
        return size / 2
    fraction = (value - lo) / (hi - lo)
    if invert:
        fraction = 1.0 - fraction
    return margin + fraction * (size - 2 * margin)


def cluster_scatter_svg(
    features2d: FeatureMatrix, partition: Partition, out: BinaryIO
) -> None:
    """Write a standalone SVG of the 2-D features colored by cluster."""
    if features2d.dim != 2:
        raise DimensionMismatch(f"scatter needs 2-D features, got {features2d.dim}-D")
    index = {item_id: row for row, item_id in enumerate(features2d.ids)}
    xs = features2d.values[:, 0]
    ys = features2d.values[:, 1]
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())

    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "version": "1.1",
            "width": str(SVG_WIDTH),
            "height": str(SVG_HEIGHT),
            "viewBox": f"0 0 {SVG_WIDTH} {SVG_HEIGHT}",
        },
    )
    ET.SubElement(svg, "title").text = f"{partition.method.label}, k={partition.k}"
    ET.SubElement(
        svg,
        "rect",
        {
            "x": "0",
            "y": "0",
            "width": str(SVG_WIDTH),
            "height": str(SVG_HEIGHT),
            "fill": "#ffffff",
        },
    )

    points = ET.SubElement(svg, "g", {"id": "points"})
    for cluster_index, cluster in enumerate(partition.clusters):
        color = PALETTE[cluster_index % len(PALETTE)]
        for member in cluster.members:
            row = index[member]
            cx = _scale(float(xs[row]), x_lo, x_hi, SVG_WIDTH, invert=False)
            cy = _scale(float(ys[row]), y_lo, y_hi, SVG_HEIGHT, invert=True)
            ET.SubElement(
                points,
                "circle",
                {"cx": f"{cx:.2f}", "cy": f"{cy:.2f}", "r": "6", "fill": color},
            )
            label = ET.SubElement(
                points,
                "text",
                {"x": f"{cx + 8:.2f}", "y": f"{cy + 4:.2f}", "font-size": "10"},
            )
            label.text = member

    legend = ET.SubElement(svg, "g", {"id": "legend"})
    for cluster_index, size in enumerate(partition.sizes):
        y = 20 + 16 * cluster_index
        ET.SubElement(
            legend,
            "rect",
            {
                "x": "10",
                "y": str(y - 9),
                "width": "10",
                "height": "10",
                "fill": PALETTE[cluster_index % len(PALETTE)],
            },
        )
        entry = ET.SubElement(legend, "text", {"x": "26", "y": str(y), "font-size": "12"})
        entry.text = f"cluster {cluster_index}: {size}"
    summary = ET.SubElement(
        legend,
        "text",
        {"x": "10", "y": str(20 + 16 * partition.k), "font-size": "12"},
    )
    summary.text = f"sizes {sizes_label(partition.sizes)}"

    out.write(ET.tostring(svg, encoding="utf-8", xml_declaration=True))
    out.write(b"\n")


def sizes_label(sizes: Sequence[int]) -> str:
    """Sorted cluster sizes, e.g. ``(7, 7, 7, 8)``."""
    return "(" + ", ".join(str(s) for s in sorted(sizes)) + ")"


# -----------------------------------------------------------------------------
# Run reports
# -----------------------------------------------------------------------------


@dataclass
class RunOutline:
    """What a report needs from one run, whether fresh or re-read from disk."""

    name: str
    method: PartitionMethod
    partition: Partition
    phase1_rates: Mapping[str, float]
    specialist_rates: Mapping[str, float]
    final_rates: Mapping[str, float]

    @property
    def selected(self) -> list[str]:
        return self.partition.member_ids

    def selected_stats(self, rates: Mapping[str, float]) -> EvalStats:
        return summarize({i: rates[i] for i in self.selected})

    def specialist_sizes_and_averages(self) -> list[tuple[int, float | None]]:
        rows: list[tuple[int, float | None]] = []
        for cluster in self.partition.clusters:
            rates = [self.specialist_rates[m] for m in cluster.members]
            rows.append((len(rates), sum(rates) / len(rates) if rates else None))
        return rows

    def comparison_rows(self) -> list[ComparisonRow]:
        return [
            ComparisonRow(
                label="Generalist (Phase 1)", stats=self.selected_stats(self.phase1_rates)
            ),
            ComparisonRow(
                label=f"Specialists ({self.method.label})",
                n_specialists=self.partition.k,
                stats=self.selected_stats(self.specialist_rates),
            ),
            ComparisonRow(
                label="Generalist (Phase 3)", stats=self.selected_stats(self.final_rates)
            ),
        ]


def _stats_table(named: Sequence[tuple[str, EvalStats]]) -> str:
    lines = [
        "| Agent | Average | Median | High | Low | Upper Quartile | Lower Quartile |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    for name, s in named:
        cells = [s.average, s.median, s.high, s.low, s.upper_quartile, s.lower_quartile]
        lines.append(f"| {name} | " + " | ".join(percent(c) for c in cells) + " |")
    return "\n".join(lines) + "\n"


def _specialist_table(outline: RunOutline) -> str:
    lines = ["| Specialist | Size | Average |", "| --- | --- | --- |"]
    for i, (size, average) in enumerate(outline.specialist_sizes_and_averages()):
        shown = NO_COUNT if average is None else percent(average)
        lines.append(f"| {i} | {size} | {shown} |")
    return "\n".join(lines) + "\n"


def render_run_report(outline: RunOutline) -> str:
    """Markdown report for a single run."""
    sections = [
        f"# Run report: {outline.name}",
        "",
        f"Partitioning: {outline.method.label}, {outline.partition.k} specialists, "
        f"{len(outline.selected)} low performers selected.",
        "",
        "## Success rate statistics",
        "",
        _stats_table(
            [
                ("Generalist (Phase 1), all variations", summarize(outline.phase1_rates)),
                ("Generalist (Phase 3), all variations", summarize(outline.final_rates)),
            ]
        ),
        "## Low performers",
        "",
        comparison_table(outline.comparison_rows()).markdown,
        "## Cluster sizes",
        "",
        f"{outline.method.label}: {sizes_label(outline.partition.sizes)}",
        "",
        "## Specialists",
        "",
        _specialist_table(outline),
    ]
    return "\n".join(sections)


def render_combined_report(outlines: Sequence[RunOutline]) -> str:
    """Markdown report juxtaposing several runs."""
    if not outlines:
        raise EmptyInput("no runs to report on")

    first = outlines[0]
    rows = [
        ComparisonRow(
            label="Generalist (Phase 1)", stats=first.selected_stats(first.phase1_rates)
        )
    ]
    for outline in outlines:
        rows.append(
            ComparisonRow(
                label=f"{outline.name}: {outline.method.label}",
                n_specialists=outline.partition.k,
                stats=outline.selected_stats(outline.specialist_rates),
            )
        )
    for outline in outlines:
        rows.append(
            ComparisonRow(
                label=f"{outline.name}: Generalist (Phase 3)",
                stats=outline.selected_stats(outline.final_rates),
            )
        )

    size_lines = ["| Run | Method | Cluster Sizes |", "| --- | --- | --- |"]
    for outline in outlines:
        size_lines.append(
            f"| {outline.name} | {outline.method.label} | "
            f"{sizes_label(outline.partition.sizes)} |"
        )

    sections = [
        "# Combined report",
        "",
        "## Average success on the low performers",
        "",
        comparison_table(rows).markdown,
        "## Cluster sizes",
        "",
        "\n".join(size_lines) + "\n",
    ]
    for outline in outlines:
        sections += [f"## Specialists: {outline.name}", "", _specialist_table(outline)]
    return "\n".join(sections)
