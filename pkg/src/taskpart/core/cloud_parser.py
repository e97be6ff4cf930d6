"""Point cloud parsing (xyz, ASCII PLY) and down-sampling."""

import logging
import math
from pathlib import Path
from typing import BinaryIO

import numpy as np

from taskpart.core.errors import (
    EmptyCloud,
    InsufficientPoints,
    MalformedRecord,
    UnsupportedPlyElement,
    UnsupportedPlyFormat,
)
from taskpart.models.cloud import CloudFormat, PointCloud

log = logging.getLogger(__name__)


class CloudFormats:
    """Suffix-based format detection for point cloud files."""

    SUPPORTED_FORMATS = {
        ".xyz": CloudFormat.XYZ,
        ".ply": CloudFormat.PLY_ASCII,
    }

    @classmethod
    def detect_format(cls, path: Path) -> CloudFormat | None:
        """Format for ``path`` by extension, or None if unsupported."""
        return cls.SUPPORTED_FORMATS.get(path.suffix.lower())

    @classmethod
    def is_supported(cls, path: Path) -> bool:
        return path.suffix.lower() in cls.SUPPORTED_FORMATS


def _read_text(source: BinaryIO | bytes, cloud_id: str) -> str:
    data = source if isinstance(source, bytes) else source.read()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data[: e.start].count(b"\n") + 1
        raise MalformedRecord(line, "not valid UTF-8 text", cloud_id) from e


def _parse_coordinates(tokens: list[str], line_no: int, source: str) -> tuple[float, ...]:
    try:
        coords = tuple(float(t) for t in tokens)
    except ValueError:
        raise MalformedRecord(line_no, f"non-numeric value in {tokens!r}", source)
    if not all(math.isfinite(c) for c in coords):
        raise MalformedRecord(line_no, "coordinates must be finite", source)
    return coords


def _parse_xyz(text: str, cloud_id: str) -> list[tuple[float, ...]]:
    points: list[tuple[float, ...]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise MalformedRecord(
                line_no, f"expected 3 values, found {len(tokens)}", cloud_id
            )
        points.append(_parse_coordinates(tokens, line_no, cloud_id))
    return points


def _parse_ply_ascii(text: str, cloud_id: str) -> list[tuple[float, ...]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MalformedRecord(1, "missing 'ply' magic line", cloud_id)

    # (element name, record count, property names)
    elements: list[tuple[str, int, list[str]]] = []
    header_end = None
    for line_no, raw in enumerate(lines[1:], start=2):
        tokens = raw.split()
        if not tokens or tokens[0] in ("comment", "obj_info"):
            continue
        keyword = tokens[0]
        if keyword == "format":
            if len(tokens) < 2 or tokens[1] != "ascii":
                raise UnsupportedPlyFormat(
                    f"{cloud_id}: only 'format ascii 1.0' is supported, got {raw.strip()!r}"
                )
        elif keyword == "element":
            if len(tokens) != 3:
                raise MalformedRecord(line_no, "bad element declaration", cloud_id)
            try:
                count = int(tokens[2])
            except ValueError:
                raise MalformedRecord(line_no, "element count is not an integer", cloud_id)
            elements.append((tokens[1], count, []))
        elif keyword == "property":
            if not elements:
                raise MalformedRecord(line_no, "property before any element", cloud_id)
            elements[-1][2].append(tokens[-1])
        elif keyword == "end_header":
            header_end = line_no
            break
        else:
            raise MalformedRecord(line_no, f"unknown header keyword '{keyword}'", cloud_id)

    if header_end is None:
        raise MalformedRecord(len(lines), "missing 'end_header'", cloud_id)

    vertex = [e for e in elements if e[0] == "vertex"]
    if not vertex:
        raise UnsupportedPlyElement(f"{cloud_id}: no vertex element declared")
    if vertex[0][2][:3] != ["x", "y", "z"]:
        raise UnsupportedPlyElement(
            f"{cloud_id}: vertex properties must start with x, y, z "
            f"(got {', '.join(vertex[0][2][:3])})"
        )

    points: list[tuple[float, ...]] = []
    cursor = header_end  # index into ``lines`` of the first body line
    for name, count, properties in elements:
        taken = 0
        while taken < count:
            if cursor >= len(lines):
                raise MalformedRecord(
                    cursor, f"file ends inside element '{name}'", cloud_id
                )
            raw = lines[cursor]
            cursor += 1
            if not raw.strip():
                continue
            taken += 1
            if name != "vertex":
                continue  # other elements are skipped record by record
            tokens = raw.split()
            if len(tokens) < len(properties):
                raise MalformedRecord(
                    cursor,
                    f"vertex record has {len(tokens)} values, "
                    f"header declares {len(properties)}",
                    cloud_id,
                )
            points.append(_parse_coordinates(tokens[:3], cursor, cloud_id))

    trailing = [i for i in range(cursor, len(lines)) if lines[i].strip()]
    if trailing:
        raise UnsupportedPlyElement(
            f"{cloud_id}: {len(trailing)} record line(s) beyond the declared elements "
            f"(first at line {trailing[0] + 1})"
        )
    return points


def parse_point_cloud(
    source: BinaryIO | bytes, format: CloudFormat, id: str
) -> PointCloud:
    """Parse an xyz or ASCII PLY document into a PointCloud, keeping file order."""
    text = _read_text(source, id)
    if format is CloudFormat.XYZ:
        points = _parse_xyz(text, id)
    else:
        points = _parse_ply_ascii(text, id)
    if not points:
        raise EmptyCloud(id)
    log.debug(f"Parsed {len(points)} points for {id} ({format.value})")
    return PointCloud(id=id, points=np.array(points, dtype=np.float64))


def sample_points(cloud: PointCloud, n: int, seed: int) -> PointCloud:
    """Draw ``n`` points uniformly without replacement, preserving source order."""
    if n < 1:
        raise ValueError("sample size must be positive")
    if n > len(cloud):
        raise InsufficientPoints(cloud.id, n, len(cloud))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(cloud), size=n, replace=False))
    return PointCloud(id=cloud.id, points=cloud.points[chosen])


def write_xyz(cloud: PointCloud) -> str:
    """Emit xyz text that re-parses to exactly the same coordinates."""
    lines = [" ".join(repr(float(c)) for c in point) for point in cloud.points]
    return "\n".join(lines) + "\n"
