"""Partition command implementation."""

from pathlib import Path

from rich.console import Console
from rich.table import Table

from taskpart.core.clustering import CapacityRule
from taskpart.core.descriptors import load_external_features
from taskpart.core.errors import ArtifactIOError
from taskpart.core.feature_pipeline import l2_normalize, pca_fit, pca_transform
from taskpart.core.gsl_pipeline import partition_features
from taskpart.core.report_writer import cluster_scatter_svg, sizes_label
from taskpart.models.features import FeatureMatrix
from taskpart.models.partition import Partition, PartitionMethod


def _project(matrix: FeatureMatrix, components: int) -> FeatureMatrix:
    normalized = l2_normalize(matrix)
    model = pca_fit(normalized, min(components, len(normalized), normalized.dim))
    return pca_transform(model, normalized)


def execute_partition(
    features_file: Path,
    k: int,
    method: PartitionMethod,
    output_file: Path,
    console: Console,
    seed: int = 0,
    svg_file: Path | None = None,
    pca_components: int = 2,
    restarts: int = 10,
    capacity_rule: CapacityRule = "floor_extra",
    quiet: bool = False,
) -> Partition:
    """Execute the partition command.

    Features are L2-normalized, projected by PCA and clustered; random
    partitioning skips the feature pipeline unless a scatter plot is asked for.
    """
    try:
        matrix = load_external_features(features_file.read_bytes())
    except OSError as e:
        raise ArtifactIOError(features_file, e.strerror or str(e))

    if method is PartitionMethod.RANDOM:
        projected = matrix
    else:
        projected = _project(matrix, pca_components)
    partition = partition_features(
        projected, method, k, seed, restarts=restarts, capacity_rule=capacity_rule
    )

    try:
        output_file.parent.mkdir(parents=True, exist_ok=True)
        output_file.write_text(partition.model_dump_json(indent=2) + "\n")
        if svg_file is not None:
            reuse = method is not PartitionMethod.RANDOM and projected.dim == 2
            scatter = projected if reuse else _project(matrix, 2)
            with open(svg_file, "wb") as out:
                cluster_scatter_svg(scatter, partition, out)
    except OSError as e:
        raise ArtifactIOError(Path(e.filename or output_file), e.strerror or str(e))

    if quiet:
        console.print(f"[green]Wrote {output_file}[/]")
        return partition

    table = Table(
        title=f"{method.label}, k={k}: sizes {sizes_label(partition.sizes)}",
        show_header=True,
        header_style="bold cyan",
    )
    table.add_column("#", style="dim", width=4)
    table.add_column("Size", justify="right", style="green")
    table.add_column("Members", style="white")
    for i, cluster in enumerate(partition.clusters):
        members = ", ".join(cluster.members)
        if len(members) > 60:
            members = members[:57] + "..."
        table.add_row(str(i), str(len(cluster.members)), members)
    console.print(table)
    if partition.cost is not None:
        console.print(f"[dim]Assignment cost:[/] {partition.cost:.6f}")
    console.print(f"[green]Wrote {output_file}[/]")
    if svg_file is not None:
        console.print(f"[green]Wrote {svg_file}[/]")
    return partition
