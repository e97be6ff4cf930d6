"""Success-rate statistics, low-performer selection and archetype recovery."""

import math
from collections.abc import Mapping

import numpy as np
from sklearn.metrics import adjusted_rand_score

from taskpart.core.errors import EmptyInput, InvalidN
from taskpart.models.partition import Partition
from taskpart.models.report import EvalStats, SelectionRule


def summarize(rates: Mapping[str, float]) -> EvalStats:
    """Mean, extremes and linearly interpolated quartiles of ``rates``.

    The mean is an exactly rounded sum divided by the count, clipped to the
    observed range.
    """
    if not rates:
        raise EmptyInput("no success rates to summarize")
    values = np.array(list(rates.values()), dtype=np.float64)
    if np.any((values < 0.0) | (values > 1.0)):
        raise ValueError("success rates must lie in [0, 1]")
    lower, median, upper = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
    low, high = float(values.min()), float(values.max())
    average = min(max(math.fsum(values.tolist()) / len(values), low), high)
    return EvalStats(
        per_variation=dict(rates),
        average=average,
        median=float(median),
        high=high,
        low=low,
        upper_quartile=float(upper),
        lower_quartile=float(lower),
    )


def select_low_performers(rates: Mapping[str, float], rule: SelectionRule) -> list[str]:
    """Ids picked by ``rule``, ordered by ascending rate then id."""
    if not rates:
        raise EmptyInput("no success rates to select from")
    ranked = sorted(rates.items(), key=lambda item: (item[1], item[0]))
    if rule.kind == "below_median":
        median = float(np.quantile(list(rates.values()), 0.5, method="linear"))
        return [item_id for item_id, rate in ranked if rate < median]
    n = rule.n if rule.n is not None else 0
    if not 0 <= n <= len(rates):
        raise InvalidN(n, len(rates))
    return [item_id for item_id, _ in ranked[:n]]


def archetype_recovery(partition: Partition, truth: Mapping[str, int]) -> float:
    """Adjusted Rand Index between the partition and ground-truth archetypes."""
    ids = partition.member_ids
    return float(adjusted_rand_score([truth[i] for i in ids], partition.labels_for(ids)))
