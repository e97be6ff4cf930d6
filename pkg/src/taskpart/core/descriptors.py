"""Shape descriptors for point clouds and feature CSV input/output.

The built-in ``shape-stats-v1`` descriptor concatenates

* the normalized eigenvalues of the centered second-moment matrix,
* a D2 shape distribution (pairwise distance histogram), and
* one projection histogram per principal axis.

Every block is normalized so that the descriptor does not change when the
cloud is uniformly scaled, and points are put in a canonical order before
any random sampling so that file order does not matter.
"""

import csv
import io
import logging
import math
from typing import BinaryIO, Literal

import numpy as np

from taskpart.core.errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyInput,
    MalformedNumber,
    MalformedRecord,
)
from taskpart.core.feature_pipeline import orient_rows
from taskpart.models.cloud import PointCloud
from taskpart.models.features import DescriptorSpec, FeatureMatrix, FeatureVector

log = logging.getLogger(__name__)


def _canonical_order(points: np.ndarray) -> np.ndarray:
    """Points sorted lexicographically by (x, y, z)."""
    order = np.lexsort((points[:, 2], points[:, 1], points[:, 0]))
    return points[order]


def _unit_histogram(values: np.ndarray, bins: int, lo: float, hi: float) -> np.ndarray:
    counts, _ = np.histogram(values, bins=bins, range=(lo, hi))
    return counts.astype(np.float64) / len(values)


def _point_mass(bins: int) -> np.ndarray:
    block = np.zeros(bins)
    block[0] = 1.0
    return block


def _d2_histogram(points: np.ndarray, spec: DescriptorSpec, seed: int) -> np.ndarray:
    n = len(points)
    rng = np.random.default_rng(seed)
    first = rng.integers(0, n, size=spec.pair_samples)
    # Draw from n - 1 indices and skip ``first`` so that i != j.
    second = rng.integers(0, n - 1, size=spec.pair_samples)
    second = second + (second >= first)
    distances = np.linalg.norm(points[first] - points[second], axis=1)
    longest = distances.max()
    if longest == 0.0:
        return _point_mass(spec.histogram_bins)
    return _unit_histogram(distances / longest, spec.histogram_bins, 0.0, 1.0)


def _axis_histograms(centered: np.ndarray, axes: np.ndarray, bins: int) -> np.ndarray:
    blocks = []
    for axis in axes:
        projection = centered @ axis
        lo, hi = float(projection.min()), float(projection.max())
        if hi == lo:
            blocks.append(_point_mass(bins))
        else:
            blocks.append(_unit_histogram(projection, bins, lo, hi))
    return np.concatenate(blocks)


def extract_descriptor(cloud: PointCloud, spec: DescriptorSpec, seed: int) -> FeatureVector:
    """Compute the ``shape-stats-v1`` descriptor of ``cloud``."""
    points = _canonical_order(cloud.points)

    if np.ptp(points, axis=0).max() == 0.0:
        log.debug(f"Cloud {cloud.id} is a single repeated point")
        values = np.concatenate(
            [
                np.zeros(3),
                _point_mass(spec.histogram_bins),
                np.tile(_point_mass(spec.axis_bins), 3),
            ]
        )
        return FeatureVector(id=cloud.id, values=values)

    centered = points - points.mean(axis=0)
    moment = centered.T @ centered / len(points)
    eigenvalues, eigenvectors = np.linalg.eigh(moment)
    order = np.argsort(-eigenvalues, kind="stable")
    spread = np.clip(eigenvalues[order], 0.0, None)
    spread = spread / spread.sum()
    axes = orient_rows(eigenvectors[:, order].T)

    values = np.concatenate(
        [
            spread,
            _d2_histogram(points, spec, seed),
            _axis_histograms(centered, axes, spec.axis_bins),
        ]
    )
    return FeatureVector(id=cloud.id, values=values)


def _parse_cell(text: str, line: int, column: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedNumber(line, column, text)
    if not math.isfinite(value):
        raise MalformedNumber(line, column, text)
    return value


def load_external_features(
    source: BinaryIO | bytes, format: Literal["csv"] = "csv"
) -> FeatureMatrix:
    """Read a feature CSV with header ``id,f0,...,f{d-1}``.

    Columns are reported 1-based, the id being column 1. All-zero columns
    are kept.
    """
    if format != "csv":
        raise ValueError(f"unsupported feature format: {format}")
    data = source if isinstance(source, bytes) else source.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data[: e.start].count(b"\n") + 1
        raise MalformedRecord(line, "not valid UTF-8 text") from e
    reader = csv.reader(io.StringIO(text))

    header: list[str] | None = None
    ids: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    for record in reader:
        line = reader.line_num
        if not record or all(not cell.strip() for cell in record):
            continue
        if header is None:
            header = [cell.strip() for cell in record]
            if len(header) < 2 or header[0] != "id":
                raise DimensionMismatch(
                    "header must be 'id' followed by at least one feature column",
                    line=line,
                )
            continue
        if len(record) != len(header):
            raise DimensionMismatch(
                f"row has {len(record)} fields, header has {len(header)}", line=line
            )
        item_id = record[0].strip()
        if item_id in seen:
            raise DuplicateId(item_id)
        seen.add(item_id)
        ids.append(item_id)
        rows.append(
            [_parse_cell(cell.strip(), line, col) for col, cell in enumerate(record[1:], 2)]
        )

    if header is None or not rows:
        raise EmptyInput("feature file contains no data rows")
    return FeatureMatrix(ids=tuple(ids), values=np.array(rows, dtype=np.float64))


def write_feature_csv(matrix: FeatureMatrix) -> str:
    """Render ``matrix`` as feature CSV; values use round-trip float repr."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id"] + [f"f{i}" for i in range(matrix.dim)])
    for item_id, row in zip(matrix.ids, matrix.values):
        writer.writerow([item_id] + [repr(float(v)) for v in row])
    return buffer.getvalue()
