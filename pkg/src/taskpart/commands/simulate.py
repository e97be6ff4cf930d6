"""Simulate command implementation."""

import re
from pathlib import Path

from rich.console import Console
from rich.table import Table

from taskpart.core.config import load_run_config
from taskpart.core.errors import ArtifactIOError, InvalidConfig
from taskpart.core.experiments import protocol_table, run_protocol
from taskpart.core.report_writer import percent
from taskpart.models.partition import PartitionMethod
from taskpart.models.report import ProtocolArm, ProtocolResult

PROTOCOL_FILES = ("protocol.md", "protocol.csv", "protocol.json")


def parse_seed_selection(selection: str) -> list[int]:
    """Parse a seed list such as ``"0-9"`` or ``"0,3,5-7"``.

    Ranges are inclusive. The result is sorted with duplicates removed.
    """
    seeds: set[int] = set()
    for part in selection.split(","):
        part = part.strip()
        if not part:
            continue
        match = re.fullmatch(r"(\d+)\s*-\s*(\d+)", part)
        if match:
            start, end = int(match.group(1)), int(match.group(2))
            if end < start:
                raise InvalidConfig(f"empty seed range '{part}'")
            seeds.update(range(start, end + 1))
        elif part.isdigit():
            seeds.add(int(part))
        else:
            raise InvalidConfig(f"cannot read seed '{part}'")
    if not seeds:
        raise InvalidConfig("no seeds given")
    return sorted(seeds)


def display_protocol(result: ProtocolResult, console: Console) -> None:
    table = Table(
        title=f"Protocol over {len(result.seeds)} seed(s)",
        show_header=True,
        header_style="bold cyan",
    )
    table.add_column("Agent", style="white")
    table.add_column("Specialists", justify="right", style="dim")
    table.add_column("Phase 1", justify="right")
    table.add_column("Specialist Phase", justify="right", style="green")
    table.add_column("Phase 3", justify="right", style="blue")
    table.add_column("Size Spread", justify="right", style="yellow")
    for s in result.arms:
        table.add_row(
            PartitionMethod(s.arm.method).label,
            str(s.arm.n_specialists),
            percent(s.phase1_selected_average),
            percent(s.specialist_average),
            percent(s.final_selected_average),
            f"{s.mean_size_spread:.2f}",
        )
    console.print()
    console.print(table)
    if len(result.arms) >= 2:
        first, second = result.arms[0].arm, result.arms[1].arm
        console.print(
            f"[dim]{first.name} beats {second.name} on[/] "
            f"{result.paired_wins(first, second)} of {len(result.seeds)} paired seed(s)"
        )
    console.print()


def execute_simulate(
    config_file: Path | None,
    methods: list[PartitionMethod],
    specialists: list[int],
    seeds: str,
    output_dir: Path,
    console: Console,
    workers: int = 1,
    quiet: bool = False,
) -> ProtocolResult:
    """Execute the simulate command: every method x specialist count on every seed."""
    config = load_run_config(config_file)
    arms = [
        ProtocolArm(method=method.value, n_specialists=k)
        for method in methods
        for k in specialists
    ]
    seed_list = parse_seed_selection(seeds)
    if not quiet:
        console.print(
            f"[dim]Running {len(arms)} arm(s) x {len(seed_list)} seed(s) "
            f"on {workers} worker(s)[/]"
        )
    result = run_protocol(config, arms, seed_list, workers=workers)
    table = protocol_table(result)

    documents = {
        "protocol.md": table.markdown,
        "protocol.csv": table.csv,
        "protocol.json": result.model_dump_json(indent=2) + "\n",
    }
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        for name in PROTOCOL_FILES:
            (output_dir / name).write_text(documents[name])
    except OSError as e:
        raise ArtifactIOError(Path(e.filename or output_dir), e.strerror or str(e))

    if quiet:
        console.print(f"[green]Wrote {output_dir}[/]")
    else:
        display_protocol(result, console)
        console.print(f"[green]Wrote {', '.join(PROTOCOL_FILES)} to {output_dir}[/]")
    return result
