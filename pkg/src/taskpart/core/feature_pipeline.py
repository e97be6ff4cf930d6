"""Feature post-processing: per-row Euclidean normalization and PCA."""

import logging

import numpy as np

from taskpart.core.errors import DimensionMismatch, InvalidK
from taskpart.models.features import FeatureMatrix, PcaModel

log = logging.getLogger(__name__)


def orient_rows(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive.

    Ties on magnitude resolve to the lowest index (``np.argmax`` order).
    """
    oriented = np.array(vectors, dtype=np.float64, copy=True)
    for row in oriented:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return oriented


def l2_normalize(matrix: FeatureMatrix) -> FeatureMatrix:
    """Divide each row by its Euclidean norm.

    Zero rows are kept as they are and reported in ``warnings``.
    """
    values = np.array(matrix.values, dtype=np.float64, copy=True)
    norms = np.linalg.norm(values, axis=1)
    warnings = list(matrix.warnings)
    for row, (item_id, norm) in enumerate(zip(matrix.ids, norms)):
        if norm == 0.0:
            message = f"feature row '{item_id}' has zero norm and was left unnormalized"
            log.warning(message)
            warnings.append(message)
            continue
        values[row] /= norm
    return FeatureMatrix(ids=matrix.ids, values=values, warnings=tuple(warnings))


def pca_fit(matrix: FeatureMatrix, k: int) -> PcaModel:
    """Fit a k-component PCA on the sample covariance (divisor n - 1)."""
    n, dim = matrix.values.shape
    if n < 2:
        raise InvalidK(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= k <= min(n, dim):
        raise InvalidK(f"k={k} must satisfy 1 <= k <= min(rows={n}, dim={dim})")

    mean = matrix.values.mean(axis=0)
    centered = matrix.values - mean
    covariance = centered.T @ centered / (n - 1)

    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(-eigenvalues, kind="stable")[:k]
    top_values = np.clip(eigenvalues[order], 0.0, None)
    components = orient_rows(eigenvectors[:, order].T)

    log.debug(f"PCA fit on {n}x{dim}: leading eigenvalues {top_values.tolist()}")
    return PcaModel(mean=mean, components=components, eigenvalues=top_values)


def pca_transform(model: PcaModel, matrix: FeatureMatrix) -> FeatureMatrix:
    """Project rows onto the model's components after centering."""
    if matrix.dim != model.dim:
        raise DimensionMismatch(
            f"features have dimension {matrix.dim}, PCA model expects {model.dim}"
        )
    projected = (matrix.values - model.mean) @ model.components.T
    return FeatureMatrix(ids=matrix.ids, values=projected, warnings=matrix.warnings)
