"""Report command implementation."""

from pathlib import Path

from rich.console import Console

from taskpart.core.errors import ArtifactIOError
from taskpart.core.report_writer import render_combined_report
from taskpart.core.run_writer import LoadedRun, load_run


def execute_report(
    run_dir: Path,
    compare: list[Path],
    console: Console,
    output_file: Path | None = None,
    verify: bool = True,
) -> str:
    """Execute the report command.

    Every run directory is verified against its manifest before anything is
    rendered; the report goes to ``output_file`` or standard output.
    """
    runs: list[LoadedRun] = [load_run(d, verify=verify) for d in [run_dir, *compare]]
    report = render_combined_report([run.outline() for run in runs])

    if output_file is None:
        console.print(report, markup=False, highlight=False, soft_wrap=True)
        return report
    try:
        output_file.parent.mkdir(parents=True, exist_ok=True)
        output_file.write_text(report)
    except OSError as e:
        raise ArtifactIOError(output_file, e.strerror or str(e))
    console.print(f"[green]Wrote report for {len(runs)} run(s) to {output_file}[/]")
    return report
