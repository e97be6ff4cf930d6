import csv
import io
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from taskpart.core.errors import DimensionMismatch, EmptyInput
from taskpart.core.report_writer import (
    PALETTE,
    RunOutline,
    cluster_scatter_svg,
    comparison_table,
    percent,
    render_combined_report,
    render_run_report,
    sizes_label,
)
from taskpart.core.statistics import summarize
from taskpart.models.features import FeatureMatrix
from taskpart.models.partition import ClusterAssignment, Partition, PartitionMethod
from taskpart.models.report import ComparisonRow

SVG = "{http://www.w3.org/2000/svg}"


def _partition(method: PartitionMethod, *groups: list[str]) -> Partition:
    return Partition(
        method=method,
        k=len(groups),
        clusters=[ClusterAssignment(members=list(g)) for g in groups],
    )


@pytest.fixture
def outline() -> RunOutline:
    return RunOutline(
        name="balanced",
        method=PartitionMethod.BALANCED_GREEDY,
        partition=_partition(PartitionMethod.BALANCED_GREEDY, ["a", "b"], ["c"]),
        phase1_rates={"a": 0.1, "b": 0.2, "c": 0.3, "d": 0.9},
        specialist_rates={"a": 0.5, "b": 0.7, "c": 0.9},
        final_rates={"a": 0.4, "b": 0.4, "c": 0.4, "d": 0.8},
    )


def test_percent():
    assert percent(0.465) == "46.5%"
    assert percent(1.0) == "100.0%"
    assert percent(0.0) == "0.0%"


def test_sizes_label_is_sorted():
    assert sizes_label([8, 7, 7, 7]) == "(7, 7, 7, 8)"


def test_comparison_table_markdown_and_csv():
    rows = [
        ComparisonRow(label="Generalist", stats=summarize({"a": 0.2, "b": 0.4})),
        ComparisonRow(
            label="Specialists", n_specialists=4, stats=summarize({"a": 0.5, "b": 0.43})
        ),
    ]
    table = comparison_table(rows)
    lines = table.markdown.splitlines()
    assert lines[0] == "| Agent | Number of Specialists | Average |"
    assert lines[2] == "| Generalist | — | 30.0% |"
    assert lines[3] == "| Specialists | 4 | 46.5% |"

    records = list(csv.DictReader(io.StringIO(table.csv)))
    assert list(records[0]) == ["agent", "n_specialists", "average"]
    assert records[0]["n_specialists"] == ""
    assert records[1]["n_specialists"] == "4"
    assert float(records[1]["average"]) == pytest.approx(0.465)


def test_comparison_table_needs_rows():
    with pytest.raises(EmptyInput):
        comparison_table([])


def test_scatter_has_one_circle_per_member():
    features = FeatureMatrix(
        ids=("a", "b", "c", "d", "e"),
        values=np.array([[0.0, 0.0], [1.0, 0.5], [2.0, 1.0], [0.5, 2.0], [1.5, 1.5]]),
    )
    partition = _partition(PartitionMethod.KMEANS_VANILLA, ["a", "b"], ["c", "d", "e"])
    buffer = io.BytesIO()
    cluster_scatter_svg(features, partition, buffer)
    root = ET.fromstring(buffer.getvalue())
    circles = root.findall(f".//{SVG}g[@id='points']/{SVG}circle")
    assert len(circles) == 5
    assert [c.get("fill") for c in circles] == [PALETTE[0]] * 2 + [PALETTE[1]] * 3
    legend = [t.text for t in root.findall(f".//{SVG}g[@id='legend']/{SVG}text")]
    assert legend[-1] == "sizes (2, 3)"
    assert root.find(f"{SVG}title").text == "Vanilla Clustering, k=2"
    for c in circles:
        assert 0.0 <= float(c.get("cx")) <= 800.0
        assert 0.0 <= float(c.get("cy")) <= 600.0


def test_scatter_of_identical_points_is_centered():
    features = FeatureMatrix(ids=("a", "b"), values=np.ones((2, 2)))
    buffer = io.BytesIO()
    cluster_scatter_svg(features, _partition(PartitionMethod.RANDOM, ["a"], ["b"]), buffer)
    circle = ET.fromstring(buffer.getvalue()).find(f".//{SVG}circle")
    assert (circle.get("cx"), circle.get("cy")) == ("400.00", "300.00")


def test_scatter_needs_two_dimensions():
    features = FeatureMatrix(ids=("a",), values=np.zeros((1, 3)))
    with pytest.raises(DimensionMismatch):
        cluster_scatter_svg(
            features, _partition(PartitionMethod.RANDOM, ["a"]), io.BytesIO()
        )


def test_run_report_sections(outline: RunOutline):
    report = render_run_report(outline)
    assert report.startswith("# Run report: balanced")
    assert "Balanced Clustering, 2 specialists, 3 low performers selected." in report
    # phase 1 average over the selected a, b, c
    assert "| Generalist (Phase 1) | — | 20.0% |" in report
    assert "| Specialists (Balanced Clustering) | 2 | 70.0% |" in report
    assert "Balanced Clustering: (1, 2)" in report
    assert "| 0 | 2 | 60.0% |" in report
    assert "| 1 | 1 | 90.0% |" in report


def test_empty_cluster_shows_a_dash(outline: RunOutline):
    outline.partition = _partition(PartitionMethod.KMEANS_VANILLA, ["a", "b", "c"], [])
    assert "| 1 | 0 | — |" in render_run_report(outline)


def test_combined_report_lists_every_run(outline: RunOutline):
    other = RunOutline(
        name="random",
        method=PartitionMethod.RANDOM,
        partition=_partition(PartitionMethod.RANDOM, ["a", "c"], ["b"]),
        phase1_rates=outline.phase1_rates,
        specialist_rates={"a": 0.3, "b": 0.3, "c": 0.3},
        final_rates=outline.final_rates,
    )
    report = render_combined_report([outline, other])
    assert "| balanced: Balanced Clustering | 2 | 70.0% |" in report
    assert "| random: Random Partitioning | 2 | 30.0% |" in report
    assert "| random | Random Partitioning | (1, 2) |" in report
    assert "## Specialists: random" in report


def test_combined_report_needs_runs():
    with pytest.raises(EmptyInput):
        render_combined_report([])
