import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from taskpart.core.errors import EmptyInput, InvalidN
from taskpart.core.statistics import (
    archetype_recovery,
    select_low_performers,
    summarize,
)
from taskpart.models.partition import ClusterAssignment, Partition, PartitionMethod
from taskpart.models.report import SelectionRule

rates_strategy = st.dictionaries(
    st.text(alphabet="abcdefgh", min_size=1, max_size=3),
    st.floats(0.0, 1.0),
    min_size=1,
    max_size=20,
)


def test_summary_of_three_rates():
    stats = summarize({"a": 0.0, "b": 0.5, "c": 1.0})
    assert stats.average == pytest.approx(0.5)
    assert stats.median == pytest.approx(0.5)
    assert stats.lower_quartile == pytest.approx(0.25)
    assert stats.upper_quartile == pytest.approx(0.75)
    assert (stats.low, stats.high) == (0.0, 1.0)
    assert stats.per_variation == {"a": 0.0, "b": 0.5, "c": 1.0}


def test_summary_of_one_rate():
    stats = summarize({"only": 0.3})
    assert stats.median == stats.lower_quartile == stats.upper_quartile == 0.3


def test_summary_rejects_empty_and_out_of_range():
    with pytest.raises(EmptyInput):
        summarize({})
    with pytest.raises(ValueError):
        summarize({"a": 1.5})


@given(rates=rates_strategy)
def test_summary_is_ordered(rates: dict[str, float]):
    s = summarize(rates)
    eps = 1e-12
    assert s.low - eps <= s.lower_quartile <= s.median + eps
    assert s.median - eps <= s.upper_quartile <= s.high + eps
    assert s.low - eps <= s.average <= s.high + eps


def test_average_of_identical_rates_is_exact():
    rates = {f"v{i:02d}": 0.7 for i in range(60)}
    assert summarize(rates).average == 0.7
    rates["last"] = 0.1
    stats = summarize(rates)
    assert stats.low <= stats.average <= stats.high
    assert stats.average == math.fsum(rates.values()) / 61


def _quantile(ordered: list[float], q: float) -> float:
    position = q * (len(ordered) - 1)
    below = math.floor(position)
    above = min(below + 1, len(ordered) - 1)
    return ordered[below] + (position - below) * (ordered[above] - ordered[below])


def test_summary_matches_a_sorted_list_oracle():
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 40))
        episodes = int(rng.integers(1, 101))
        values = (rng.integers(0, episodes + 1, size=n) / episodes).tolist()
        stats = summarize({f"v{i:02d}": v for i, v in enumerate(values)})
        ordered = sorted(values)
        assert (stats.low, stats.high) == (ordered[0], ordered[-1])
        assert stats.low <= stats.average <= stats.high
        assert stats.average == pytest.approx(math.fsum(values) / n, abs=1e-15)
        assert stats.lower_quartile == pytest.approx(_quantile(ordered, 0.25), abs=1e-12)
        assert stats.median == pytest.approx(_quantile(ordered, 0.5), abs=1e-12)
        assert stats.upper_quartile == pytest.approx(_quantile(ordered, 0.75), abs=1e-12)


def test_below_median():
    rates = {"a": 0.1, "b": 0.2, "c": 0.9, "d": 0.95}
    assert select_low_performers(rates, SelectionRule.below_median()) == ["a", "b"]


def test_below_median_of_identical_rates_is_empty():
    rates = {"a": 0.5, "b": 0.5, "c": 0.5}
    assert select_low_performers(rates, SelectionRule.below_median()) == []


def test_worst_n_breaks_ties_by_id():
    rates = {"c": 0.2, "a": 0.2, "b": 0.1, "d": 0.7}
    assert select_low_performers(rates, SelectionRule.worst(3)) == ["b", "a", "c"]
    assert select_low_performers(rates, SelectionRule.worst(0)) == []


def test_worst_n_out_of_range():
    with pytest.raises(InvalidN):
        select_low_performers({"a": 0.1}, SelectionRule.worst(2))
    with pytest.raises(InvalidN):
        select_low_performers({"a": 0.1}, SelectionRule.worst(-1))


def test_selection_on_empty_rates():
    with pytest.raises(EmptyInput):
        select_low_performers({}, SelectionRule.below_median())


@given(rates=rates_strategy, data=st.data())
def test_worst_n_picks_the_lowest_rates(rates: dict[str, float], data: st.DataObject):
    n = data.draw(st.integers(0, len(rates)))
    chosen = select_low_performers(rates, SelectionRule.worst(n))
    assert len(chosen) == n
    rest = set(rates) - set(chosen)
    if chosen and rest:
        assert max(rates[i] for i in chosen) <= min(rates[i] for i in rest)
    assert [rates[i] for i in chosen] == sorted(rates[i] for i in chosen)


@given(rates=rates_strategy)
def test_below_median_rates_are_below_every_other(rates: dict[str, float]):
    chosen = select_low_performers(rates, SelectionRule.below_median())
    assert len(chosen) < len(rates)
    rest = set(rates) - set(chosen)
    assert all(rates[i] < rates[j] for i in chosen for j in rest)


def _partition(*groups: list[str]) -> Partition:
    return Partition(
        method=PartitionMethod.BALANCED_GREEDY,
        k=len(groups),
        clusters=[ClusterAssignment(members=list(g)) for g in groups],
    )


def test_perfect_archetype_recovery():
    truth = {"a": 0, "b": 0, "c": 1, "d": 1}
    assert archetype_recovery(_partition(["c", "d"], ["a", "b"]), truth) == pytest.approx(1.0)


def test_mixed_archetype_recovery_is_lower():
    truth = {"a": 0, "b": 0, "c": 1, "d": 1}
    assert archetype_recovery(_partition(["a", "c"], ["b", "d"]), truth) < 0.5
