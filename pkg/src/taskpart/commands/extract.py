"""Extract command implementation."""

import logging
from dataclasses import dataclass
from pathlib import Path

from rich.console import Console
from rich.panel import Panel

from taskpart.cache.manager import FeatureCache
from taskpart.cache.models import DescriptorKey
from taskpart.core.cloud_parser import CloudFormats, parse_point_cloud, sample_points
from taskpart.core.descriptors import (
    extract_descriptor,
    load_external_features,
    write_feature_csv,
)
from taskpart.core.errors import ArtifactIOError, EmptyInput, InvalidConfig
from taskpart.core.parallel import ordered_map
from taskpart.models.cloud import CloudFormat
from taskpart.models.features import DescriptorSpec, FeatureMatrix, FeatureVector

log = logging.getLogger(__name__)

DEFAULT_SAMPLE = 10000


@dataclass(frozen=True)
class CloudJob:
    """One file to turn into a descriptor."""

    path: Path
    format: CloudFormat
    sample: int
    seed: int
    spec: DescriptorSpec


@dataclass(frozen=True)
class CloudResult:
    vector: FeatureVector
    n_points: int


def find_cloud_files(
    input_path: Path, format: CloudFormat | None
) -> list[tuple[Path, CloudFormat]]:
    """Point cloud files under ``input_path`` with the format each is read as.

    A directory yields its supported files sorted by name; with ``format`` set,
    only files of that format are taken and no suffix check applies to a
    single file.
    """
    if input_path.is_file():
        detected = format or CloudFormats.detect_format(input_path)
        if detected is None:
            raise InvalidConfig(
                f"cannot tell the format of {input_path}; pass --format xyz or ply"
            )
        return [(input_path, detected)]

    if not input_path.is_dir():
        raise ArtifactIOError(input_path, "no such file or directory")

    found = []
    for path in sorted(input_path.iterdir()):
        detected = CloudFormats.detect_format(path)
        if not path.is_file() or detected is None:
            continue
        if format is not None and detected is not format:
            continue
        found.append((path, detected))
    if not found:
        raise EmptyInput(f"no point cloud files in {input_path}")
    return found


def extract_one(job: CloudJob) -> CloudResult:
    """Parse, down-sample and describe a single file."""
    try:
        data = job.path.read_bytes()
    except OSError as e:
        raise ArtifactIOError(job.path, e.strerror or str(e))
    cloud = parse_point_cloud(data, job.format, job.path.stem)
    sampled = sample_points(cloud, job.sample, job.seed)
    return CloudResult(extract_descriptor(sampled, job.spec, job.seed), len(cloud))


def extract_features(
    files: list[tuple[Path, CloudFormat]],
    spec: DescriptorSpec,
    sample: int,
    seed: int,
    cache: FeatureCache | None = None,
    workers: int = 1,
) -> tuple[FeatureMatrix, int]:
    """Descriptors for ``files`` in input order, plus how many came from the cache.

    Every cloud is sampled and described with the same ``seed``.
    """
    key = DescriptorKey(spec=spec, sample=sample, seed=seed)
    vectors: dict[Path, FeatureVector] = {}
    if cache is not None:
        for path, _ in files:
            hit = cache.get(path, key, path.stem)
            if hit is not None:
                vectors[path] = hit
    hits = len(vectors)

    jobs = [
        CloudJob(path=path, format=fmt, sample=sample, seed=seed, spec=spec)
        for path, fmt in files
        if path not in vectors
    ]
    for job, result in zip(jobs, ordered_map(extract_one, jobs, workers)):
        vectors[job.path] = result.vector
        if cache is not None:
            cache.put(job.path, key, result.vector, result.n_points)

    log.info(f"Extracted {len(jobs)} descriptor(s), {hits} from cache")
    return FeatureMatrix.from_vectors(vectors[path] for path, _ in files), hits


def execute_extract(
    input_path: Path | None,
    output_file: Path,
    console: Console,
    format: CloudFormat | None = None,
    sample: int = DEFAULT_SAMPLE,
    descriptor: str = "shape-stats-v1",
    features_file: Path | None = None,
    seed: int = 0,
    spec: DescriptorSpec | None = None,
    force: bool = False,
    workers: int = 1,
    quiet: bool = False,
    cache_dir: Path | None = None,
) -> FeatureMatrix:
    """Execute the extract command."""
    if descriptor == "external":
        if features_file is None:
            raise InvalidConfig("--descriptor external needs --features FILE")
        try:
            matrix = load_external_features(features_file.read_bytes())
        except OSError as e:
            raise ArtifactIOError(features_file, e.strerror or str(e))
        source = f"external features {features_file}"
        hits = 0
    else:
        if input_path is None:
            raise InvalidConfig("--input is required unless --descriptor external")
        files = find_cloud_files(input_path, format)
        cache = None if force else FeatureCache(cache_dir or Path.cwd())
        matrix, hits = extract_features(
            files, spec or DescriptorSpec(), sample, seed, cache, workers
        )
        source = f"{len(files)} cloud file(s) in {input_path}"

    try:
        output_file.parent.mkdir(parents=True, exist_ok=True)
        output_file.write_text(write_feature_csv(matrix))
    except OSError as e:
        raise ArtifactIOError(output_file, e.strerror or str(e))

    for warning in matrix.warnings:
        console.print(f"[yellow]⚠ {warning}[/]")
    if quiet:
        console.print(f"[green]Wrote {output_file}[/]")
    else:
        console.print(
            Panel(
                f"[dim]Source:[/] {source}\n"
                f"[dim]Rows:[/] {len(matrix)}\n"
                f"[dim]Dimension:[/] {matrix.dim}\n"
                f"[dim]Cached:[/] {hits}\n"
                f"[dim]Output:[/] {output_file}",
                title="Features Extracted",
                border_style="green",
            )
        )
    return matrix
