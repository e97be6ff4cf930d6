"""Data models for feature vectors, descriptors and the PCA projection."""

from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from taskpart.core.errors import DimensionMismatch, DuplicateId


class DescriptorSpec(BaseModel):
    """Parameters of the built-in classical shape descriptor."""

    name: Literal["shape-stats-v1"] = "shape-stats-v1"
    pair_samples: int = Field(default=2048, ge=1)
    histogram_bins: int = Field(default=32, ge=1)
    axis_bins: int = Field(default=8, ge=1)

    @property
    def dim(self) -> int:
        """Output dimension: eigenvalues + D2 histogram + three axis histograms."""
        return 3 + self.histogram_bins + 3 * self.axis_bins


@dataclass(frozen=True)
class FeatureVector:
    """One variation's feature vector."""

    id: str
    values: np.ndarray


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-variation feature rows sharing one dimension.

    ``warnings`` collects non-fatal notes produced by the step that built the
    matrix (e.g. zero-norm rows left unnormalized).
    """

    ids: tuple[str, ...]
    values: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch(f"feature values must be 2-D, got {values.ndim}-D")
        if values.shape[0] != len(self.ids):
            raise DimensionMismatch(
                f"{len(self.ids)} ids but {values.shape[0]} feature rows"
            )
        seen: set[str] = set()
        for item_id in self.ids:
            if item_id in seen:
                raise DuplicateId(item_id)
            seen.add(item_id)
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "values", values)

    @classmethod
    def from_vectors(cls, vectors: Iterable[FeatureVector]) -> "FeatureMatrix":
        vectors = list(vectors)
        if not vectors:
            raise DimensionMismatch("cannot build a feature matrix from zero vectors")
        dim = len(vectors[0].values)
        for vector in vectors:
            if len(vector.values) != dim:
                raise DimensionMismatch(
                    f"vector '{vector.id}' has dimension {len(vector.values)}, "
                    f"expected {dim}"
                )
        return cls(
            ids=tuple(v.id for v in vectors),
            values=np.vstack([np.asarray(v.values, dtype=np.float64) for v in vectors]),
        )

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def rows(self) -> list[FeatureVector]:
        return [FeatureVector(id=i, values=v) for i, v in zip(self.ids, self.values)]

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, ids: Iterable[str]) -> "FeatureMatrix":
        """Rows for ``ids``, in the order given."""
        index = {item_id: row for row, item_id in enumerate(self.ids)}
        wanted = list(ids)
        missing = [i for i in wanted if i not in index]
        if missing:
            raise KeyError(f"ids not in feature matrix: {', '.join(missing)}")
        return FeatureMatrix(
            ids=tuple(wanted), values=self.values[[index[i] for i in wanted]]
        )


class PcaModelDocument(BaseModel):
    """JSON form of a fitted PCA model."""

    mean: list[float]
    components: list[list[float]]
    eigenvalues: list[float]
    k: int
    dim: int


@dataclass(frozen=True)
class PcaModel:
    """Fitted projection: ``components`` is ``(k, d)`` with orthonormal rows."""

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    @property
    def k(self) -> int:
        return int(self.components.shape[0])

    @property
    def dim(self) -> int:
        return int(self.components.shape[1])

    def to_document(self) -> PcaModelDocument:
        return PcaModelDocument(
            mean=self.mean.tolist(),
            components=self.components.tolist(),
            eigenvalues=self.eigenvalues.tolist(),
            k=self.k,
            dim=self.dim,
        )

    @classmethod
    def from_document(cls, doc: PcaModelDocument) -> "PcaModel":
        components = np.asarray(doc.components, dtype=np.float64).reshape(doc.k, doc.dim)
        eigenvalues = np.asarray(doc.eigenvalues, dtype=np.float64)
        return cls(
            mean=np.asarray(doc.mean, dtype=np.float64),
            components=components,
            eigenvalues=eigenvalues,
        )
