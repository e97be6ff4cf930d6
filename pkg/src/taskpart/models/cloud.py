"""Data models for raw point clouds."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from taskpart.core.errors import EmptyCloud


class CloudFormat(str, Enum):
    """Supported point cloud text formats."""

    XYZ = "xyz"
    PLY_ASCII = "ply_ascii"


@dataclass(frozen=True)
class PointCloud:
    """Raw 3D point set for one environment variation.

    ``points`` is an ``(n, 3)`` float64 array in file order.
    """

    id: str
    points: np.ndarray

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {points.shape}")
        if points.shape[0] == 0:
            raise EmptyCloud(self.id)
        if not np.all(np.isfinite(points)):
            raise ValueError(f"cloud '{self.id}' contains non-finite coordinates")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return int(self.points.shape[0])
