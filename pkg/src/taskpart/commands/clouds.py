"""Clouds command implementation."""

import json
from pathlib import Path

from rich.console import Console

from taskpart.core.cloud_parser import write_xyz
from taskpart.core.config import load_run_config
from taskpart.core.errors import ArtifactIOError
from taskpart.core.gridworld import generate_variations, variation_point_cloud
from taskpart.core.seeding import Phase, derive_seed
from taskpart.models.simulation import VariationSpec

# Every handle template has at least four cells, so this clears the
# default extraction sample of 10000 points.
DEFAULT_POINTS_PER_CELL = 2500

VARIATIONS_FILE = "variations.json"


def execute_clouds(
    config_file: Path | None,
    output_dir: Path,
    console: Console,
    points_per_cell: int = DEFAULT_POINTS_PER_CELL,
    quiet: bool = False,
) -> list[VariationSpec]:
    """Write one ``<id>.xyz`` per simulator variation plus ``variations.json``."""
    config = load_run_config(config_file)
    variations = generate_variations(config)

    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        for i, v in enumerate(variations):
            cloud = variation_point_cloud(
                v,
                config.feature_noise_sigma,
                derive_seed(config.master_seed, Phase.FEATURES, i),
                points_per_cell=points_per_cell,
            )
            (output_dir / f"{v.id}.xyz").write_text(write_xyz(cloud))
        truth = [v.model_dump(mode="json") for v in variations]
        (output_dir / VARIATIONS_FILE).write_text(json.dumps(truth, indent=2) + "\n")
    except OSError as e:
        raise ArtifactIOError(Path(e.filename or output_dir), e.strerror or str(e))

    if not quiet:
        archetypes = sorted({v.archetype for v in variations})
        console.print(
            f"[dim]{len(variations)} variation(s) over {len(archetypes)} archetype(s), "
            f"{points_per_cell} point(s) per handle cell[/]"
        )
    console.print(f"[green]Wrote {len(variations)} cloud(s) to {output_dir}[/]")
    return variations
