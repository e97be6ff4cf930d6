from functools import lru_cache

import numpy as np
import pytest

from taskpart.core import gsl_pipeline
from taskpart.core.descriptors import extract_descriptor
from taskpart.core.errors import InvalidConfig, PipelineError
from taskpart.core.feature_pipeline import l2_normalize, pca_fit, pca_transform
from taskpart.core.gridworld import (
    evaluate,
    generate_variations,
    new_learner,
    train,
    variation_point_cloud,
)
from taskpart.core.gsl_pipeline import RunResult, partition_features, run_gsl_pipeline
from taskpart.core.seeding import Phase, derive_seed
from taskpart.core.statistics import archetype_recovery
from taskpart.models.features import FeatureMatrix
from taskpart.models.partition import PartitionMethod
from taskpart.models.simulation import RunConfig, TrainingBudget, VariationSpec


def test_tiny_run_shapes(tiny_config: RunConfig):
    result = run_gsl_pipeline(tiny_config, PartitionMethod.BALANCED_GREEDY)
    ids = [v.id for v in result.variations]
    assert ids == ["v000", "v001", "v002", "v003"]
    assert result.features.dim == tiny_config.descriptor.dim
    assert sorted(result.selected) == ids
    assert result.partition.sizes == [1, 1, 1, 1]
    assert result.n_specialists == 4
    assert set(result.phase1_rates) == set(result.final_rates) == set(ids)
    assert set(result.specialist_rates) == set(result.selected)
    for rates in (result.phase1_rates, result.specialist_rates, result.final_rates):
        assert all(0.0 <= r <= 1.0 for r in rates.values())
    assert [s.size for s in result.specialists] == [1, 1, 1, 1]
    assert result.specialist_samples == 4 * 200
    assert result.scatter_points.dim == 2


def test_demo_accounting(tiny_config: RunConfig):
    result = run_gsl_pipeline(tiny_config, PartitionMethod.RANDOM)
    requested = tiny_config.demos_per_variation * tiny_config.n_variations
    assert result.demo_trajectories + result.demo_shortfall == requested
    assert set(result.demo_attempts) == {v.id for v in result.variations}
    cap = tiny_config.demo_attempts_factor * tiny_config.demos_per_variation
    assert all(0 < a <= cap for a in result.demo_attempts.values())


def test_runs_are_reproducible(tiny_config: RunConfig):
    first = run_gsl_pipeline(tiny_config, PartitionMethod.BALANCED_GREEDY)
    second = run_gsl_pipeline(tiny_config, PartitionMethod.BALANCED_GREEDY)
    assert first.phase1_rates == second.phase1_rates
    assert first.partition == second.partition
    assert first.specialist_rates == second.specialist_rates
    assert first.final_rates == second.final_rates


def test_worker_count_does_not_change_results(small_config: RunConfig):
    serial = run_gsl_pipeline(small_config, PartitionMethod.BALANCED_GREEDY, workers=1)
    pooled = run_gsl_pipeline(small_config, PartitionMethod.BALANCED_GREEDY, workers=2)
    assert serial.partition == pooled.partition
    assert serial.specialist_rates == pooled.specialist_rates
    assert serial.final_rates == pooled.final_rates


def test_seed_changes_results(small_config: RunConfig):
    first = run_gsl_pipeline(small_config, PartitionMethod.BALANCED_GREEDY)
    other = small_config.model_copy(update={"master_seed": 1})
    second = run_gsl_pipeline(other, PartitionMethod.BALANCED_GREEDY)
    assert first.features.values.tobytes() != second.features.values.tobytes()
    assert [v.handle_cells for v in first.variations] != [
        v.handle_cells for v in second.variations
    ]


def test_balanced_sizes_in_small_run(small_config: RunConfig):
    result = run_gsl_pipeline(small_config, PartitionMethod.BALANCED_GREEDY)
    assert len(result.selected) >= small_config.n_specialists
    assert sum(result.partition.sizes) == len(result.selected)
    assert max(result.partition.sizes) - min(result.partition.sizes) <= 1
    assert result.phase1_stats.low <= result.phase1_stats.high


def test_selection_falls_back_to_the_worst(tiny_config: RunConfig):
    # an untrained generalist fails everywhere, so nothing is below the median
    config = tiny_config.model_copy(
        update={
            "n_low": None,
            "n_specialists": 2,
            "budget_phase1": TrainingBudget(n_sample=0),
        }
    )
    result = run_gsl_pipeline(config, PartitionMethod.BALANCED_GREEDY)
    assert set(result.phase1_rates.values()) == {0.0}
    assert result.selected == ["v000", "v001"]


def test_more_pca_components_keep_a_2d_scatter(tiny_config: RunConfig):
    config = tiny_config.model_copy(update={"pca_components": 3})
    result = run_gsl_pipeline(config, PartitionMethod.KMEANS_VANILLA)
    assert result.projected.dim == 3
    assert result.pca.k == 3
    assert result.scatter_points.dim == 2


def test_validation_failures_keep_their_type():
    with pytest.raises(InvalidConfig):
        run_gsl_pipeline(
            RunConfig(n_variations=7, g_archetypes=7), PartitionMethod.BALANCED_GREEDY
        )


def test_unexpected_failures_name_the_phase(tiny_config: RunConfig, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(gsl_pipeline, "train", broken)
    with pytest.raises(PipelineError) as info:
        run_gsl_pipeline(tiny_config, PartitionMethod.BALANCED_GREEDY)
    assert info.value.phase == "phase1"
    assert info.value.exit_code == 1


def _uneven_features() -> FeatureMatrix:
    config = RunConfig(n_variations=20, g_archetypes=4, archetype_counts=[2, 4, 6, 8])
    vectors = []
    for i, v in enumerate(generate_variations(config)):
        cloud = variation_point_cloud(v, config.feature_noise_sigma, seed=i)
        vectors.append(extract_descriptor(cloud, config.descriptor, seed=i))
    normalized = l2_normalize(FeatureMatrix.from_vectors(vectors))
    return pca_transform(pca_fit(normalized, 2), normalized)


def test_vanilla_follows_uneven_archetypes_while_balanced_does_not():
    projected = _uneven_features()
    vanilla = partition_features(projected, PartitionMethod.KMEANS_VANILLA, 4, seed=0)
    balanced = partition_features(projected, PartitionMethod.BALANCED_GREEDY, 4, seed=0)
    assert max(vanilla.sizes) - min(vanilla.sizes) >= 3
    assert balanced.sizes == [5, 5, 5, 5]


def test_random_partition_ignores_features():
    projected = _uneven_features()
    blank = FeatureMatrix(ids=projected.ids, values=np.zeros_like(projected.values))
    assert partition_features(projected, PartitionMethod.RANDOM, 4, seed=3) == (
        partition_features(blank, PartitionMethod.RANDOM, 4, seed=3)
    )


def _projected_family(config: RunConfig) -> tuple[FeatureMatrix, dict[str, int]]:
    variations = generate_variations(config)
    vectors = []
    for i, v in enumerate(variations):
        seed = derive_seed(config.master_seed, Phase.FEATURES, i)
        cloud = variation_point_cloud(v, config.feature_noise_sigma, seed)
        vectors.append(extract_descriptor(cloud, config.descriptor, seed))
    normalized = l2_normalize(FeatureMatrix.from_vectors(vectors))
    truth = {v.id: v.archetype for v in variations}
    return pca_transform(pca_fit(normalized, 2), normalized), truth


def test_balanced_partition_recovers_archetypes():
    scores = []
    for seed in range(10):
        config = RunConfig(n_variations=32, g_archetypes=4, master_seed=seed)
        projected, truth = _projected_family(config)
        partition = partition_features(
            projected, PartitionMethod.BALANCED_GREEDY, 4, seed=seed
        )
        scores.append(archetype_recovery(partition, truth))
    assert float(np.median(scores)) >= 0.9


SEEDS = range(10)


@lru_cache(maxsize=None)
def _default_run(method: PartitionMethod, seed: int) -> RunResult:
    return run_gsl_pipeline(RunConfig(master_seed=seed), method, workers=2)


def _over_seeds(method: PartitionMethod, metric: str) -> list[float]:
    return [float(getattr(_default_run(method, s), metric)) for s in SEEDS]


@pytest.mark.slow
def test_default_config_generalist_learns():
    runs = [_default_run(PartitionMethod.BALANCED_GREEDY, s) for s in SEEDS]
    averages = [run.phase1_stats.average for run in runs]
    assert np.mean(averages) >= 0.25
    assert sum(a > 0.0 for a in averages) >= 7


@pytest.mark.slow
def test_default_config_balanced_specialists_beat_random_ones():
    balanced = _over_seeds(PartitionMethod.BALANCED_GREEDY, "specialist_average")
    random = _over_seeds(PartitionMethod.RANDOM, "specialist_average")
    assert np.mean(balanced) - np.mean(random) >= 0.05
    assert sum(b >= r for b, r in zip(balanced, random)) >= 6


@pytest.mark.slow
def test_default_config_finetuning_lifts_the_low_performers():
    phase1 = _over_seeds(PartitionMethod.BALANCED_GREEDY, "phase1_selected_average")
    final = _over_seeds(PartitionMethod.BALANCED_GREEDY, "final_selected_average")
    assert np.mean(final) - np.mean(phase1) >= 0.10


@pytest.mark.slow
def test_default_config_collects_most_demonstrations():
    runs = [_default_run(PartitionMethod.BALANCED_GREEDY, s) for s in SEEDS]
    for run in runs:
        assert run.demo_trajectories + run.demo_shortfall == 600
    assert np.mean([run.demo_trajectories for run in runs]) >= 0.7 * 600


@pytest.mark.slow
def test_one_archetype_trains_better_than_two():
    budget = TrainingBudget(n_sample=2000)
    wins = 0
    for seed in SEEDS:
        variations = generate_variations(RunConfig(master_seed=seed))
        first, second = [v for v in variations if v.archetype == 1][:2]
        other = next(v for v in variations if v.archetype == 3)
        train_seed = derive_seed(seed, Phase.SPECIALISTS)
        eval_seed = derive_seed(seed, Phase.SPECIALIST_EVAL)

        def mean_success(pair: list[VariationSpec]) -> float:
            learner = train(new_learner(9), pair, budget, train_seed)
            return float(np.mean([evaluate(learner, v, 100, eval_seed) for v in pair]))

        wins += mean_success([first, second]) >= mean_success([first, other])
    assert wins >= 8
