"""Main CLI application."""

import logging
from enum import Enum
from pathlib import Path
from typing import Annotated, NoReturn, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from taskpart.cache.manager import FeatureCache
from taskpart.core.errors import TaskPartError
from taskpart.core.parallel import THREADS_ENV, resolve_workers
from taskpart.models.cloud import CloudFormat
from taskpart.models.partition import PartitionMethod

app = typer.Typer(
    name="taskpart",
    help="Point-cloud feature based task partitioning for generalist-specialist learning.",
    add_completion=False,
    no_args_is_help=True,
)

console = Console()
err_console = Console(stderr=True)

# Cache subcommand group
cache_app = typer.Typer(help="Descriptor cache management commands")
app.add_typer(cache_app, name="cache")


class Method(str, Enum):
    BALANCED = "balanced"
    VANILLA = "vanilla"
    RANDOM = "random"

    @property
    def partition_method(self) -> PartitionMethod:
        return {
            Method.BALANCED: PartitionMethod.BALANCED_GREEDY,
            Method.VANILLA: PartitionMethod.KMEANS_VANILLA,
            Method.RANDOM: PartitionMethod.RANDOM,
        }[self]


class Format(str, Enum):
    XYZ = "xyz"
    PLY = "ply"

    @property
    def cloud_format(self) -> CloudFormat:
        return CloudFormat.XYZ if self is Format.XYZ else CloudFormat.PLY_ASCII


class Descriptor(str, Enum):
    SHAPE_STATS = "shape-stats-v1"
    EXTERNAL = "external"


def _fail(error: Exception) -> NoReturn:
    """Print ``error`` and exit with the code its class maps to."""
    if isinstance(error, TaskPartError):
        err_console.print(f"[red]Error: {error}[/]")
        raise typer.Exit(error.exit_code)
    err_console.print(f"[red]I/O error: {error}[/]")
    raise typer.Exit(1)


WorkersOption = Annotated[
    Optional[int],
    typer.Option(
        "--workers",
        "-w",
        help=f"Worker processes (default: ${THREADS_ENV}, or all CPUs)",
        min=1,
    ),
]

ConfigOption = Annotated[
    Optional[Path],
    typer.Option(
        "--config",
        "-c",
        help="Run configuration JSON (default: built-in desk-scale config)",
        exists=True,
        file_okay=True,
        dir_okay=False,
    ),
]

QuietOption = Annotated[
    bool,
    typer.Option(
        "--quiet",
        "-q",
        help="Only report what was written",
    ),
]


@app.callback()
def main(
    verbose: Annotated[
        bool,
        typer.Option(
            "--verbose",
            "-v",
            help="Log phase progress to stderr",
        ),
    ] = False,
) -> None:
    """Extract features, partition variations and run the generalist-specialist loop."""
    logging.basicConfig(
        level=logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )
    logging.getLogger("taskpart").setLevel(logging.INFO if verbose else logging.WARNING)


@app.command()
def extract(
    out: Annotated[
        Path,
        typer.Option(
            "--out",
            "-o",
            help="Feature CSV to write",
        ),
    ],
    input_path: Annotated[
        Optional[Path],
        typer.Option(
            "--input",
            "-i",
            help="Point cloud file or directory of .xyz/.ply files",
        ),
    ] = None,
    format: Annotated[
        Optional[Format],
        typer.Option(
            "--format",
            "-f",
            help="Read clouds as this format (default: by file extension)",
        ),
    ] = None,
    sample: Annotated[
        int,
        typer.Option(
            "--sample",
            "-n",
            help="Points drawn from each cloud before describing it",
            min=1,
        ),
    ] = 10000,
    descriptor: Annotated[
        Descriptor,
        typer.Option(
            "--descriptor",
            "-d",
            help="Built-in shape descriptor, or features computed elsewhere",
        ),
    ] = Descriptor.SHAPE_STATS,
    features: Annotated[
        Optional[Path],
        typer.Option(
            "--features",
            help="Feature CSV to validate and pass through (with --descriptor external)",
        ),
    ] = None,
    seed: Annotated[
        int,
        typer.Option(
            "--seed",
            "-s",
            help="Seed for point sampling and pair sampling",
            min=0,
        ),
    ] = 0,
    force: Annotated[
        bool,
        typer.Option(
            "--force",
            help="Recompute every descriptor, ignore cache",
        ),
    ] = False,
    workers: WorkersOption = None,
    quiet: QuietOption = False,
) -> None:
    """Turn point clouds into one feature row per variation."""
    from taskpart.commands.extract import execute_extract

    try:
        execute_extract(
            input_path=input_path,
            output_file=out,
            console=console,
            format=format.cloud_format if format else None,
            sample=sample,
            descriptor=descriptor.value,
            features_file=features,
            seed=seed,
            force=force,
            workers=resolve_workers(workers),
            quiet=quiet,
        )
    except (TaskPartError, OSError) as e:
        _fail(e)


@app.command()
def partition(
    features: Annotated[
        Path,
        typer.Option(
            "--features",
            "-f",
            help="Feature CSV (id,f0,...)",
        ),
    ],
    out: Annotated[
        Path,
        typer.Option(
            "--out",
            "-o",
            help="Partition JSON to write",
        ),
    ],
    k: Annotated[
        int,
        typer.Option(
            "--k",
            "-k",
            help="Number of groups (specialists)",
            min=1,
        ),
    ] = 4,
    method: Annotated[
        Method,
        typer.Option(
            "--method",
            "-m",
            help="balanced: greedy balanced clustering; vanilla: plain k-means; random",
        ),
    ] = Method.BALANCED,
    seed: Annotated[
        int,
        typer.Option(
            "--seed",
            "-s",
            help="Seed for k-means++ restarts or the random split",
            min=0,
        ),
    ] = 0,
    svg: Annotated[
        Optional[Path],
        typer.Option(
            "--svg",
            help="Also write a scatter plot of the 2-D projection",
        ),
    ] = None,
    quiet: QuietOption = False,
) -> None:
    """Partition feature rows into k groups."""
    from taskpart.commands.partition import execute_partition

    try:
        execute_partition(
            features_file=features,
            k=k,
            method=method.partition_method,
            output_file=out,
            console=console,
            seed=seed,
            svg_file=svg,
            quiet=quiet,
        )
    except (TaskPartError, OSError) as e:
        _fail(e)


@app.command()
def pipeline(
    out: Annotated[
        Path,
        typer.Option(
            "--out",
            "-o",
            help="Run directory to write",
        ),
    ],
    config: ConfigOption = None,
    method: Annotated[
        Method,
        typer.Option(
            "--method",
            "-m",
            help="How low performers are split among specialists",
        ),
    ] = Method.BALANCED,
    workers: WorkersOption = None,
    quiet: QuietOption = False,
) -> None:
    """Run generalist training, specialist training and fine-tuning end to end.

    Writes the configuration, features, PCA model, partition, the three rate
    tables, a Markdown report, a scatter plot and a manifest of their digests.
    """
    from taskpart.commands.pipeline import execute_pipeline

    try:
        execute_pipeline(
            config_file=config,
            method=method.partition_method,
            output_dir=out,
            console=console,
            workers=resolve_workers(workers),
            quiet=quiet,
        )
    except (TaskPartError, OSError) as e:
        _fail(e)


@app.command()
def simulate(
    out: Annotated[
        Path,
        typer.Option(
            "--out",
            "-o",
            help="Directory for protocol.md, protocol.csv and protocol.json",
        ),
    ],
    config: ConfigOption = None,
    methods: Annotated[
        Optional[list[Method]],
        typer.Option(
            "--method",
            "-m",
            help="Partition method to compare (repeatable, default: balanced and random)",
        ),
    ] = None,
    specialists: Annotated[
        Optional[list[int]],
        typer.Option(
            "--k",
            "-k",
            help="Specialist count (repeatable, default: the config's)",
            min=1,
        ),
    ] = None,
    seeds: Annotated[
        str,
        typer.Option(
            "--seeds",
            "-s",
            help="Master seeds, e.g. '0-9' or '0,2,4'",
        ),
    ] = "0-9",
    workers: WorkersOption = None,
    quiet: QuietOption = False,
) -> None:
    """Compare partition methods and specialist counts over many seeds."""
    from taskpart.commands.simulate import execute_simulate
    from taskpart.core.config import load_run_config

    try:
        chosen = methods or [Method.BALANCED, Method.RANDOM]
        counts = specialists or [load_run_config(config).n_specialists]
        execute_simulate(
            config_file=config,
            methods=[m.partition_method for m in chosen],
            specialists=counts,
            seeds=seeds,
            output_dir=out,
            console=console,
            workers=resolve_workers(workers),
            quiet=quiet,
        )
    except (TaskPartError, OSError) as e:
        _fail(e)


@app.command()
def report(
    run: Annotated[
        Path,
        typer.Option(
            "--run",
            "-r",
            help="Run directory written by 'taskpart pipeline'",
        ),
    ],
    compare: Annotated[
        Optional[list[Path]],
        typer.Option(
            "--compare",
            help="Further run directories to juxtapose (repeatable)",
        ),
    ] = None,
    out: Annotated[
        Optional[Path],
        typer.Option(
            "--out",
            "-o",
            help="Markdown file to write (default: standard output)",
        ),
    ] = None,
) -> None:
    """Combine run directories into one Markdown comparison report."""
    from taskpart.commands.report import execute_report

    try:
        execute_report(
            run_dir=run,
            compare=compare or [],
            console=console,
            output_file=out,
        )
    except (TaskPartError, OSError) as e:
        _fail(e)


@app.command()
def clouds(
    out: Annotated[
        Path,
        typer.Option(
            "--out",
            "-o",
            help="Directory for the .xyz clouds and variations.json",
        ),
    ],
    config: ConfigOption = None,
    points_per_cell: Annotated[
        int,
        typer.Option(
            "--points-per-cell",
            help="Jittered points emitted for each handle cell",
            min=1,
        ),
    ] = 2500,
    quiet: QuietOption = False,
) -> None:
    """Export the simulator's variations as point clouds with ground truth."""
    from taskpart.commands.clouds import execute_clouds

    try:
        execute_clouds(
            config_file=config,
            output_dir=out,
            console=console,
            points_per_cell=points_per_cell,
            quiet=quiet,
        )
    except (TaskPartError, OSError) as e:
        _fail(e)


@cache_app.command("clear")
def cache_clear(
    project_dir: Annotated[
        Path,
        typer.Option(
            "--dir",
            "-d",
            help="Project directory containing the cache (default: current directory)",
        ),
    ] = Path("."),
) -> None:
    """Clear all cached descriptors."""
    count = FeatureCache(project_dir.resolve()).clear_cache()

    if count > 0:
        console.print(f"[green]Cleared {count} cached file(s)[/]")
    else:
        console.print("[dim]No cache to clear[/]")


@cache_app.command("list")
def cache_list(
    project_dir: Annotated[
        Path,
        typer.Option(
            "--dir",
            "-d",
            help="Project directory containing the cache (default: current directory)",
        ),
    ] = Path("."),
) -> None:
    """List all point cloud files with cached descriptors."""
    cached = FeatureCache(project_dir.resolve()).list_cached()

    if not cached:
        console.print("[dim]No cached files[/]")
        return

    table = Table(title="Cached Files", show_header=True, header_style="bold cyan")
    table.add_column("Path", style="white")
    table.add_column("Hash", style="dim", width=12)

    for path, file_hash in cached:
        display_path = path if len(path) < 60 else "..." + path[-57:]
        table.add_row(display_path, file_hash[:12])

    console.print(table)


if __name__ == "__main__":
    app()
