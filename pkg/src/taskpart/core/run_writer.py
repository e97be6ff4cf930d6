"""Run directories: writing every artifact of a run and reading them back."""

import csv
import hashlib
import io
import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

from pydantic import ValidationError

from taskpart.core.config import parse_run_config
from taskpart.core.descriptors import load_external_features, write_feature_csv
from taskpart.core.errors import ArtifactIOError, DuplicateId, ManifestError, TaskPartError
from taskpart.core.gsl_pipeline import RunResult
from taskpart.core.report_writer import RunOutline, cluster_scatter_svg, render_run_report
from taskpart.models.features import FeatureMatrix, PcaModel, PcaModelDocument
from taskpart.models.partition import Partition
from taskpart.models.report import ArtifactEntry, RunManifest
from taskpart.models.simulation import RunConfig

log = logging.getLogger(__name__)

T = TypeVar("T")

MANIFEST_FILE = "manifest.json"
ARTIFACT_FILES = (
    "config.json",
    "features.csv",
    "pca_model.json",
    "partition.json",
    "phase1_rates.csv",
    "specialist_rates.csv",
    "final_rates.csv",
    "report.md",
    "scatter.svg",
)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def rates_csv(rates: Mapping[str, float], clusters: Mapping[str, int] | None = None) -> str:
    """``id,rate`` (or ``id,cluster,rate``) CSV with round-trip float repr."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if clusters is None:
        writer.writerow(["id", "rate"])
        for item_id, rate in rates.items():
            writer.writerow([item_id, repr(float(rate))])
    else:
        writer.writerow(["id", "cluster", "rate"])
        for item_id, rate in rates.items():
            writer.writerow([item_id, clusters[item_id], repr(float(rate))])
    return buffer.getvalue()


def read_rates_csv(text: str) -> tuple[dict[str, float], dict[str, int]]:
    """Inverse of ``rates_csv``; the cluster map is empty for two-column files."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty rates file")
    header, body = rows[0], rows[1:]
    rates: dict[str, float] = {}
    clusters: dict[str, int] = {}
    for row in body:
        if not row:
            continue
        if header == ["id", "cluster", "rate"]:
            clusters[row[0]] = int(row[1])
        elif header != ["id", "rate"]:
            raise ValueError(f"unexpected header {header}")
        if row[0] in rates:
            raise DuplicateId(row[0])
        rates[row[0]] = float(row[-1])
    return rates, clusters


def _render_artifacts(result: RunResult, name: str) -> dict[str, bytes]:
    svg = io.BytesIO()
    cluster_scatter_svg(result.scatter_points, result.partition, svg)
    clusters = {
        m: i for i, cluster in enumerate(result.partition.clusters) for m in cluster.members
    }
    return {
        "config.json": (result.config.model_dump_json(indent=2) + "\n").encode(),
        "features.csv": write_feature_csv(result.features).encode(),
        "pca_model.json": (result.pca.to_document().model_dump_json(indent=2) + "\n").encode(),
        "partition.json": (result.partition.model_dump_json(indent=2) + "\n").encode(),
        "phase1_rates.csv": rates_csv(result.phase1_rates).encode(),
        "specialist_rates.csv": rates_csv(result.specialist_rates, clusters).encode(),
        "final_rates.csv": rates_csv(result.final_rates).encode(),
        "report.md": render_run_report(result.outline(name)).encode(),
        "scatter.svg": svg.getvalue(),
    }


def _write(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as e:
        raise ArtifactIOError(path, e.strerror or str(e))


def persist_run(result: RunResult, directory: Path) -> RunManifest:
    """Write the ten run artifacts into ``directory`` and return the manifest."""
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArtifactIOError(directory, e.strerror or str(e))

    artifacts = _render_artifacts(result, directory.name)
    entries = []
    for name in ARTIFACT_FILES:
        data = artifacts[name]
        _write(directory / name, data)
        entries.append(ArtifactEntry(name=name, sha256=sha256_bytes(data), size=len(data)))

    manifest = RunManifest(
        method=result.method.value,
        n_specialists=result.n_specialists,
        master_seed=result.config.master_seed,
        n_selected=len(result.selected),
        demo_trajectories=result.demo_trajectories,
        demo_shortfall=result.demo_shortfall,
        files=entries,
    )
    _write(directory / MANIFEST_FILE, (manifest.model_dump_json(indent=2) + "\n").encode())
    log.info(f"Wrote run directory {directory}")
    return manifest


@dataclass
class LoadedRun:
    """A run directory read back from disk."""

    directory: Path
    manifest: RunManifest
    config: RunConfig
    features: FeatureMatrix
    pca: PcaModel
    partition: Partition
    phase1_rates: dict[str, float]
    specialist_rates: dict[str, float]
    specialist_clusters: dict[str, int]
    final_rates: dict[str, float]
    report: str

    def outline(self) -> RunOutline:
        return RunOutline(
            name=self.directory.name,
            method=self.partition.method,
            partition=self.partition,
            phase1_rates=self.phase1_rates,
            specialist_rates=self.specialist_rates,
            final_rates=self.final_rates,
        )


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError:
        raise ManifestError(path, "file is missing")
    except OSError as e:
        raise ArtifactIOError(path, e.strerror or str(e))


def _decode(directory: Path, name: str, data: bytes, reader: Callable[[bytes], T]) -> T:
    try:
        return reader(data)
    except (ValidationError, ValueError, TaskPartError) as e:
        raise ManifestError(directory / name, f"unreadable: {e}")


def load_run(directory: Path, verify: bool = True) -> LoadedRun:
    """Read a run directory; with ``verify`` every digest is checked first."""
    manifest_path = directory / MANIFEST_FILE
    try:
        manifest = RunManifest.model_validate_json(_read(manifest_path))
    except ValidationError as e:
        raise ManifestError(manifest_path, f"invalid manifest ({e.error_count()} error(s))")

    listed = {entry.name: entry for entry in manifest.files}
    missing = [name for name in ARTIFACT_FILES if name not in listed]
    if missing:
        raise ManifestError(manifest_path, f"does not list {', '.join(missing)}")

    blobs: dict[str, bytes] = {}
    for name in ARTIFACT_FILES:
        path = directory / name
        data = _read(path)
        if verify and sha256_bytes(data) != listed[name].sha256:
            raise ManifestError(path, "digest mismatch")
        blobs[name] = data

    def decode(name: str, reader: Callable[[bytes], T]) -> T:
        return _decode(directory, name, blobs[name], reader)

    def rates(name: str) -> tuple[dict[str, float], dict[str, int]]:
        return decode(name, lambda b: read_rates_csv(b.decode()))

    config = decode("config.json", lambda b: parse_run_config(b.decode()))
    features = decode("features.csv", load_external_features)
    pca = decode(
        "pca_model.json",
        lambda b: PcaModel.from_document(PcaModelDocument.model_validate_json(b)),
    )
    partition = decode("partition.json", Partition.model_validate_json)
    phase1, _ = rates("phase1_rates.csv")
    specialist, clusters = rates("specialist_rates.csv")
    final, _ = rates("final_rates.csv")

    return LoadedRun(
        directory=directory,
        manifest=manifest,
        config=config,
        features=features,
        pca=pca,
        partition=partition,
        phase1_rates=phase1,
        specialist_rates=specialist,
        specialist_clusters=clusters,
        final_rates=final,
        report=decode("report.md", bytes.decode),
    )
