"""k-means and balanced assignment of feature rows to clusters."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import linear_sum_assignment

from taskpart.core.errors import DimensionMismatch, InstanceTooLarge, InvalidK
from taskpart.models.features import FeatureMatrix
from taskpart.models.partition import (
    Centroids,
    ClusterAssignment,
    Partition,
    PartitionMethod,
)

log = logging.getLogger(__name__)

ORACLE_LIMIT = 64

CapacityRule = Literal["floor_extra", "ceil"]


@dataclass
class LloydRun:
    """Outcome of one Lloyd run; ``history`` holds the inertia after every iteration."""

    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    history: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.history)


def squared_distances(values: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """``(n, k)`` table of squared Euclidean distances."""
    diff = values[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _check_dims(matrix: FeatureMatrix, centroids: Centroids) -> None:
    if matrix.dim != centroids.dim:
        raise DimensionMismatch(
            f"features have dimension {matrix.dim}, centroids have {centroids.dim}"
        )


def _check_k(k: int, n: int) -> None:
    if k < 1:
        raise InvalidK(f"k must be positive, got {k}")
    if k > n:
        raise InvalidK(f"k={k} exceeds the number of rows ({n})")


def kmeans_plusplus(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new center drawn with probability proportional to D(x)^2."""
    n = len(values)
    centers = np.empty((k, values.shape[1]))
    centers[0] = values[rng.integers(0, n)]
    closest = squared_distances(values, centers[:1])[:, 0]
    for i in range(1, k):
        total = closest.sum()
        if total == 0.0:
            pick = int(rng.integers(0, n))
        else:
            pick = int(rng.choice(n, p=closest / total))
        centers[i] = values[pick]
        closest = np.minimum(closest, squared_distances(values, centers[i : i + 1])[:, 0])
    return centers


def _reseed_empty(
    values: np.ndarray, centers: np.ndarray, labels: np.ndarray, dist: np.ndarray
) -> None:
    """Give every empty cluster the point farthest from its own centroid."""
    k = len(centers)
    for cluster in range(k):
        sizes = np.bincount(labels, minlength=k)
        if sizes[cluster] > 0:
            continue
        own = dist[np.arange(len(values)), labels]
        movable = sizes[labels] > 1
        if not movable.any():
            break
        candidates = np.where(movable, own, -np.inf)
        point = int(np.argmax(candidates))
        labels[point] = cluster
        centers[cluster] = values[point]
        dist[:, cluster] = squared_distances(values, centers[cluster : cluster + 1])[:, 0]


def lloyd(
    values: np.ndarray, initial: np.ndarray, max_iter: int = 300, tol: float = 1e-8
) -> LloydRun:
    """Run Lloyd iterations from ``initial`` until improvement < ``tol`` or ``max_iter``."""
    centers = np.array(initial, dtype=np.float64, copy=True)
    k = len(centers)
    history: list[float] = []
    labels = np.zeros(len(values), dtype=np.intp)

    for _ in range(max_iter):
        dist = squared_distances(values, centers)
        labels = np.argmin(dist, axis=1)
        _reseed_empty(values, centers, labels, dist)

        for cluster in range(k):
            members = labels == cluster
            if members.any():
                centers[cluster] = values[members].mean(axis=0)

        dist = squared_distances(values, centers)
        inertia = float(dist[np.arange(len(values)), labels].sum())
        improvement = history[-1] - inertia if history else np.inf
        history.append(inertia)
        if improvement < tol or inertia == 0.0:
            break

    return LloydRun(centroids=centers, labels=labels, inertia=history[-1], history=history)


def single_moves(
    values: np.ndarray, run: LloydRun, tol: float = 1e-8, max_passes: int = 300
) -> LloydRun:
    """Move single rows between clusters while that lowers the inertia.

    Moving row ``x`` from cluster ``a`` to ``q`` changes the inertia by
    ``n_q/(n_q+1)*|x-c_q|^2 - n_a/(n_a-1)*|x-c_a|^2``. Lloyd's fixed points
    can still admit such moves; the result is never worse than ``run``.
    """
    labels = run.labels.copy()
    k = len(run.centroids)
    sizes = np.bincount(labels, minlength=k).astype(np.float64)
    if (sizes == 0).any():
        return run
    centers = np.array([values[labels == c].mean(axis=0) for c in range(k)])

    for _ in range(max_passes):
        moved = False
        for row, x in enumerate(values):
            a = int(labels[row])
            if sizes[a] <= 1:
                continue
            dist = ((centers - x) ** 2).sum(axis=1)
            leave = sizes[a] / (sizes[a] - 1) * dist[a]
            join = sizes / (sizes + 1) * dist
            join[a] = np.inf
            q = int(np.argmin(join))
            if join[q] >= leave - tol:
                continue
            centers[a] = (centers[a] * sizes[a] - x) / (sizes[a] - 1)
            centers[q] = (centers[q] * sizes[q] + x) / (sizes[q] + 1)
            sizes[a] -= 1
            sizes[q] += 1
            labels[row] = q
            moved = True
        if not moved:
            break

    if (labels == run.labels).all():
        return run
    centers = np.array([values[labels == c].mean(axis=0) for c in range(k)])
    inertia = float(((values - centers[labels]) ** 2).sum())
    if inertia >= run.inertia:
        return run
    return LloydRun(
        centroids=centers, labels=labels, inertia=inertia, history=[*run.history, inertia]
    )


def kmeans(
    matrix: FeatureMatrix,
    k: int,
    seed: int,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-8,
) -> Centroids:
    """Best of ``restarts`` k-means++ seeded Lloyd runs by final inertia.

    Each run is polished with :func:`single_moves` before runs are compared.
    """
    _check_k(k, len(matrix))
    rng = np.random.default_rng(seed)
    best: LloydRun | None = None
    for attempt in range(restarts):
        run = lloyd(matrix.values, kmeans_plusplus(matrix.values, k, rng), max_iter, tol)
        run = single_moves(matrix.values, run, tol, max_iter)
        log.debug(
            f"k-means restart {attempt}: inertia {run.inertia:.6g} "
            f"after {run.iterations} iteration(s)"
        )
        if best is None or run.inertia < best.inertia:
            best = run
    assert best is not None
    return Centroids(positions=best.centroids, inertia=best.inertia)


def _build_partition(
    method: PartitionMethod,
    ids: Sequence[str],
    labels: Sequence[int],
    k: int,
    seed: int,
    centroids: Centroids | None,
    cost: float | None,
    capacity_rule: CapacityRule = "floor_extra",
) -> Partition:
    members: list[list[str]] = [[] for _ in range(k)]
    for item_id, label in zip(ids, labels):
        members[int(label)].append(item_id)
    clusters = [
        ClusterAssignment(
            centroid=None if centroids is None else centroids.positions[i].tolist(),
            members=members[i],
        )
        for i in range(k)
    ]
    return Partition(
        method=method,
        seed=seed,
        k=k,
        clusters=clusters,
        cost=cost,
        capacity_rule=capacity_rule,
    )


def _cost(sq: np.ndarray, labels: np.ndarray) -> float:
    return float(sq[np.arange(len(labels)), labels].sum())


def assign_vanilla(matrix: FeatureMatrix, centroids: Centroids, seed: int = 0) -> Partition:
    """Nearest-centroid assignment; ties go to the lowest centroid index."""
    _check_dims(matrix, centroids)
    sq = squared_distances(matrix.values, centroids.positions)
    labels = np.argmin(sq, axis=1)
    return _build_partition(
        PartitionMethod.KMEANS_VANILLA,
        matrix.ids,
        labels,
        centroids.k,
        seed,
        centroids,
        _cost(sq, labels),
    )


def assign_balanced_greedy(
    matrix: FeatureMatrix,
    centroids: Centroids,
    seed: int = 0,
    capacity_rule: CapacityRule = "floor_extra",
) -> Partition:
    """Greedy scan of the (row, centroid) distance table in ascending order.

    Each cluster holds ``n // k`` rows; ``n % k`` clusters may take one extra
    row, first come first served. With ``capacity_rule="ceil"`` every cluster
    may instead hold up to ``ceil(n / k)`` rows.
    """
    _check_dims(matrix, centroids)
    n, k = len(matrix), centroids.k
    _check_k(k, n)

    sq = squared_distances(matrix.values, centroids.positions)
    # Stable sort on the row-major table breaks ties by (row, centroid).
    order = np.argsort(np.sqrt(sq).ravel(), kind="stable")

    floor = n // k
    extra_budget = n % k
    ceiling = -(-n // k)
    sizes = [0] * k
    used_extra = [False] * k
    labels = [-1] * n
    remaining = n

    for flat in order.tolist():
        row, cluster = divmod(flat, k)
        if labels[row] != -1:
            continue
        if capacity_rule == "ceil":
            accept = sizes[cluster] < ceiling
        elif sizes[cluster] < floor:
            accept = True
        elif sizes[cluster] == floor and not used_extra[cluster] and extra_budget > 0:
            used_extra[cluster] = True
            extra_budget -= 1
            accept = True
        else:
            accept = False
        if accept:
            labels[row] = cluster
            sizes[cluster] += 1
            remaining -= 1
            if remaining == 0:
                break

    label_array = np.array(labels)
    log.debug(f"Balanced assignment sizes: {sizes}")
    return _build_partition(
        PartitionMethod.BALANCED_GREEDY,
        matrix.ids,
        label_array,
        k,
        seed,
        centroids,
        _cost(sq, label_array),
        capacity_rule,
    )


def assign_random(ids: Sequence[str], k: int, seed: int) -> Partition:
    """Shuffle ``ids`` and cut them into k contiguous groups of near-equal size."""
    _check_k(k, len(ids))
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(len(ids))
    labels = np.empty(len(ids), dtype=np.intp)
    for cluster, chunk in enumerate(np.array_split(shuffled, k)):
        labels[chunk] = cluster
    return _build_partition(PartitionMethod.RANDOM, ids, labels, k, seed, None, None)


def optimal_balanced_assignment(
    matrix: FeatureMatrix, centroids: Centroids, seed: int = 0
) -> Partition:
    """Exact minimum-cost assignment under the floor + single-extra capacities.

    Each centroid is duplicated into ``n // k`` regular slots plus one extra
    slot. Extra slots carry a penalty larger than any assignment cost, so the
    optimum fills all regular slots and uses exactly ``n % k`` extras.
    """
    _check_dims(matrix, centroids)
    n, k = len(matrix), centroids.k
    if n > ORACLE_LIMIT:
        raise InstanceTooLarge(n, ORACLE_LIMIT)
    _check_k(k, n)

    sq = squared_distances(matrix.values, centroids.positions)
    floor = n // k
    slot_owner = [c for c in range(k) for _ in range(floor)]
    penalties = [0.0] * len(slot_owner)
    if n % k:
        penalty = float(sq.sum()) + 1.0
        slot_owner += list(range(k))
        penalties += [penalty] * k

    cost_table = sq[:, slot_owner] + np.array(penalties)[None, :]
    rows, slots = linear_sum_assignment(cost_table)
    labels = np.empty(n, dtype=np.intp)
    labels[rows] = np.array(slot_owner)[slots]
    return _build_partition(
        PartitionMethod.BALANCED_GREEDY,
        matrix.ids,
        labels,
        k,
        seed,
        centroids,
        _cost(sq, labels),
    )
