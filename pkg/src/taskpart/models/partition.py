"""Data models for centroids and partitions of variations."""

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator


class PartitionMethod(str, Enum):
    """How a partition was produced."""

    RANDOM = "random"
    KMEANS_VANILLA = "kmeans_vanilla"
    BALANCED_GREEDY = "balanced_greedy"

    @property
    def label(self) -> str:
        return {
            PartitionMethod.RANDOM: "Random Partitioning",
            PartitionMethod.KMEANS_VANILLA: "Vanilla Clustering",
            PartitionMethod.BALANCED_GREEDY: "Balanced Clustering",
        }[self]


@dataclass(frozen=True)
class Centroids:
    """``positions`` is ``(k, d)``; ``inertia`` is set when produced by k-means."""

    positions: np.ndarray
    inertia: float | None = None

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[0] < 1:
            raise ValueError(f"centroids must be (k, d) with k >= 1, got {positions.shape}")
        if not np.all(np.isfinite(positions)):
            raise ValueError("centroid coordinates must be finite")
        object.__setattr__(self, "positions", positions)

    @property
    def k(self) -> int:
        return int(self.positions.shape[0])

    @property
    def dim(self) -> int:
        return int(self.positions.shape[1])


class ClusterAssignment(BaseModel):
    """One cluster: its centroid (absent for random partitions) and member ids."""

    centroid: list[float] | None = None
    members: list[str] = Field(default_factory=list)


class Partition(BaseModel):
    """Assignment of variation ids to k clusters."""

    method: PartitionMethod
    seed: int = 0
    k: int = Field(ge=1)
    clusters: list[ClusterAssignment]
    cost: float | None = None
    capacity_rule: Literal["floor_extra", "ceil"] = "floor_extra"

    @model_validator(mode="after")
    def _check_clusters(self) -> "Partition":
        if len(self.clusters) != self.k:
            raise ValueError(f"expected {self.k} clusters, got {len(self.clusters)}")
        seen: set[str] = set()
        for member in self.member_ids:
            if member in seen:
                raise ValueError(f"id '{member}' is in more than one cluster")
            seen.add(member)
        if (
            self.method is PartitionMethod.BALANCED_GREEDY
            and self.capacity_rule == "floor_extra"
            and max(self.sizes) - min(self.sizes) > 1
        ):
            raise ValueError(f"balanced cluster sizes {self.sizes} differ by more than one")
        return self

    @property
    def sizes(self) -> list[int]:
        return [len(c.members) for c in self.clusters]

    @property
    def member_ids(self) -> list[str]:
        return [m for c in self.clusters for m in c.members]

    def labels_for(self, ids: Sequence[str]) -> list[int]:
        """Cluster index per id, in the order of ``ids``."""
        lookup = {m: i for i, c in enumerate(self.clusters) for m in c.members}
        return [lookup[i] for i in ids]
