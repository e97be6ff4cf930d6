"""Pipeline command implementation."""

from pathlib import Path

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from taskpart.core.config import load_run_config
from taskpart.core.gsl_pipeline import RunResult, run_gsl_pipeline
from taskpart.core.report_writer import NO_COUNT, percent, sizes_label
from taskpart.core.run_writer import persist_run
from taskpart.models.partition import PartitionMethod
from taskpart.models.report import RunManifest


def display_run(
    result: RunResult, manifest: RunManifest, directory: Path, console: Console
) -> None:
    """Summary panel plus the low-performer comparison table."""
    console.print()
    console.print(
        Panel(
            f"[bold]{result.method.label}[/]\n\n"
            f"[dim]Variations:[/] {len(result.variations)}\n"
            f"[dim]Low performers:[/] {len(result.selected)}\n"
            f"[dim]Specialists:[/] {result.n_specialists} "
            f"(sizes {sizes_label(result.partition.sizes)})\n"
            f"[dim]Demonstrations:[/] {manifest.demo_trajectories} "
            f"(shortfall {manifest.demo_shortfall})\n"
            f"[dim]Master seed:[/] {manifest.master_seed}\n"
            f"[dim]Run directory:[/] {directory}",
            title="Run Summary",
            border_style="green",
        )
    )

    table = Table(
        title="Average Success on Low Performers",
        show_header=True,
        header_style="bold cyan",
    )
    table.add_column("Agent", style="white")
    table.add_column("Number of Specialists", justify="right", style="dim")
    table.add_column("Average", justify="right", style="green")
    for row in result.outline(directory.name).comparison_rows():
        count = NO_COUNT if row.n_specialists is None else str(row.n_specialists)
        table.add_row(row.label, count, percent(row.stats.average))
    console.print()
    console.print(table)
    console.print(
        f"[dim]All variations:[/] Phase 1 {percent(result.phase1_stats.average)}, "
        f"Phase 3 {percent(result.final_stats.average)}"
    )
    console.print()


def execute_pipeline(
    config_file: Path | None,
    method: PartitionMethod,
    output_dir: Path,
    console: Console,
    workers: int = 1,
    quiet: bool = False,
) -> RunResult:
    """Execute the pipeline command."""
    config = load_run_config(config_file)
    if not quiet:
        console.print(
            f"[dim]Running {method.label} on {config.n_variations} variations, "
            f"seed {config.master_seed}, {workers} worker(s)[/]"
        )
    result = run_gsl_pipeline(config, method, workers=workers)
    manifest = persist_run(result, output_dir)

    if quiet:
        console.print(f"[green]Wrote {output_dir}[/]")
    else:
        display_run(result, manifest, output_dir, console)
    return result
