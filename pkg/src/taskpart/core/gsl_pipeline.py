"""The three-phase generalist / specialist / fine-tune loop on the simulator."""

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field

from taskpart.core.clustering import (
    CapacityRule,
    assign_balanced_greedy,
    assign_random,
    assign_vanilla,
    kmeans,
)
from taskpart.core.descriptors import extract_descriptor
from taskpart.core.errors import PipelineError, ValidationFailure
from taskpart.core.feature_pipeline import l2_normalize, pca_fit, pca_transform
from taskpart.core.gridworld import (
    PlateauDetector,
    clone_learner,
    collect_demos,
    evaluate,
    finetune_generalist,
    generate_variations,
    new_learner,
    train,
    variation_point_cloud,
)
from taskpart.core.parallel import ordered_map
from taskpart.core.report_writer import RunOutline
from taskpart.core.seeding import Phase, derive_seed
from taskpart.core.statistics import select_low_performers, summarize
from taskpart.models.features import FeatureMatrix, PcaModel
from taskpart.models.partition import Partition, PartitionMethod
from taskpart.models.report import EvalStats, SelectionRule, SpecialistSummary
from taskpart.models.simulation import (
    LearnerState,
    RewardConfig,
    RunConfig,
    TrainingBudget,
    VariationSpec,
)

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Every intermediate artifact of one pipeline run."""

    config: RunConfig
    method: PartitionMethod
    variations: list[VariationSpec]
    features: FeatureMatrix
    pca: PcaModel
    projected: FeatureMatrix
    partition: Partition
    scatter_points: FeatureMatrix
    phase1_rates: dict[str, float]
    phase1_stats: EvalStats
    selected: list[str]
    specialist_rates: dict[str, float]
    specialists: list[SpecialistSummary]
    final_rates: dict[str, float]
    final_stats: EvalStats
    demo_trajectories: int = 0
    demo_shortfall: int = 0
    specialist_samples: int = 0
    demo_attempts: dict[str, int] = field(default_factory=dict)

    @property
    def n_specialists(self) -> int:
        return self.partition.k

    def outline(self, name: str) -> RunOutline:
        return RunOutline(
            name=name,
            method=self.method,
            partition=self.partition,
            phase1_rates=self.phase1_rates,
            specialist_rates=self.specialist_rates,
            final_rates=self.final_rates,
        )

    def _selected_average(self, rates: dict[str, float]) -> float:
        if not self.selected:
            return 0.0
        return sum(rates[i] for i in self.selected) / len(self.selected)

    @property
    def phase1_selected_average(self) -> float:
        return self._selected_average(self.phase1_rates)

    @property
    def specialist_average(self) -> float:
        return self._selected_average(self.specialist_rates)

    @property
    def final_selected_average(self) -> float:
        return self._selected_average(self.final_rates)


@dataclass(frozen=True)
class SpecialistTask:
    """Picklable unit of specialist training."""

    index: int
    generalist: LearnerState
    variations: list[VariationSpec]
    budget: TrainingBudget
    seed: int
    rewards: RewardConfig
    reset_exploration: bool
    epsilon: float


def train_specialist(task: SpecialistTask) -> LearnerState:
    """Clone the generalist and train it on one cluster."""
    specialist = clone_learner(task.generalist, task.reset_exploration, task.epsilon)
    if not task.variations:
        return specialist
    return train(specialist, task.variations, task.budget, task.seed, task.rewards)


@contextmanager
def _phase(name: str) -> Iterator[None]:
    log.info(f"Phase '{name}' started")
    try:
        yield
    except ValidationFailure:
        log.error(f"Phase '{name}' rejected its input")
        raise
    except PipelineError:
        raise
    except Exception as e:
        raise PipelineError(name, str(e) or type(e).__name__) from e


def _selection_rule(config: RunConfig) -> SelectionRule:
    if config.n_low is not None:
        return SelectionRule.worst(config.n_low)
    return SelectionRule.below_median()


def partition_features(
    projected: FeatureMatrix,
    method: PartitionMethod,
    k: int,
    seed: int,
    *,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-8,
    capacity_rule: CapacityRule = "floor_extra",
) -> Partition:
    """Split the rows of ``projected`` into ``k`` groups with ``method``.

    Random partitioning only looks at the ids.
    """
    if method is PartitionMethod.RANDOM:
        return assign_random(list(projected.ids), k, seed)
    centroids = kmeans(projected, k, seed, restarts=restarts, max_iter=max_iter, tol=tol)
    if method is PartitionMethod.KMEANS_VANILLA:
        return assign_vanilla(projected, centroids, seed)
    return assign_balanced_greedy(projected, centroids, seed, capacity_rule=capacity_rule)


def _partition(
    config: RunConfig,
    method: PartitionMethod,
    features: FeatureMatrix,
    selected: list[str],
) -> tuple[Partition, PcaModel, FeatureMatrix, FeatureMatrix]:
    seed = derive_seed(config.master_seed, Phase.PARTITION)
    chosen = l2_normalize(features.subset(selected))
    fit_on = l2_normalize(features) if config.pca_fit_scope == "all" else chosen
    if len(fit_on) < 2:
        fit_on = l2_normalize(features)
    k_pca = min(config.pca_components, len(fit_on), fit_on.dim)
    pca = pca_fit(fit_on, k_pca)
    projected = pca_transform(pca, chosen)
    if projected.dim == 2:
        scatter = projected
    else:
        scatter = pca_transform(pca_fit(fit_on, min(2, len(fit_on), fit_on.dim)), chosen)

    partition = partition_features(
        projected,
        method,
        config.n_specialists,
        seed,
        restarts=config.kmeans_restarts,
        max_iter=config.kmeans_max_iter,
        tol=config.kmeans_tol,
        capacity_rule=config.capacity_rule,
    )
    return partition, pca, projected, scatter


def run_gsl_pipeline(
    config: RunConfig, partition_method: PartitionMethod, workers: int = 1
) -> RunResult:
    """Phase 1, selection, partitioning, Phase 2, Phase 3 and final evaluation.

    Results depend on ``config`` only; ``workers`` changes how many
    specialists train at once, never what they learn.
    """
    master = config.master_seed

    with _phase("variations"):
        variations = generate_variations(config)
        by_id = {v.id: v for v in variations}
        position = {v.id: i for i, v in enumerate(variations)}

    with _phase("features"):
        vectors = []
        for i, v in enumerate(variations):
            seed = derive_seed(master, Phase.FEATURES, i)
            cloud = variation_point_cloud(v, config.feature_noise_sigma, seed)
            vectors.append(extract_descriptor(cloud, config.descriptor, seed))
        features = FeatureMatrix.from_vectors(vectors)

    with _phase("phase1"):
        plateau = (
            PlateauDetector(config.plateau_window, config.plateau_threshold)
            if config.phase1_plateau
            else None
        )
        generalist = train(
            new_learner(config.grid, config.hyper),
            variations,
            config.budget_phase1,
            derive_seed(master, Phase.PHASE1),
            config.rewards,
            plateau=plateau,
        )
        phase1_rates = {
            v.id: evaluate(
                generalist,
                v,
                config.eval_episodes,
                derive_seed(master, Phase.PHASE1_EVAL, i),
                config.rewards,
            )
            for i, v in enumerate(variations)
        }
        phase1_stats = summarize(phase1_rates)
        log.info(f"Phase 1 generalist average success {phase1_stats.average:.3f}")

    with _phase("selection"):
        selected = select_low_performers(phase1_rates, _selection_rule(config))
        if len(selected) < config.n_specialists:
            log.warning(
                f"Only {len(selected)} variation(s) fall below the median; "
                f"taking the {config.n_specialists} worst instead"
            )
            selected = select_low_performers(
                phase1_rates, SelectionRule.worst(config.n_specialists)
            )

    with _phase("partition"):
        partition, pca, projected, scatter = _partition(
            config, partition_method, features, selected
        )
        log.info(f"Partitioned {len(selected)} variations into sizes {partition.sizes}")

    with _phase("specialists"):
        tasks = [
            SpecialistTask(
                index=i,
                generalist=generalist,
                variations=[by_id[m] for m in cluster.members],
                budget=config.budget_specialist,
                seed=derive_seed(master, Phase.SPECIALISTS, i),
                rewards=config.rewards,
                reset_exploration=config.reset_exploration,
                epsilon=config.hyper.epsilon,
            )
            for i, cluster in enumerate(partition.clusters)
        ]
        specialists = ordered_map(train_specialist, tasks, workers)
        specialist_rates: dict[str, float] = {}
        summaries = []
        for i, (cluster, specialist) in enumerate(zip(partition.clusters, specialists)):
            rates = [
                evaluate(
                    specialist,
                    by_id[m],
                    config.eval_episodes,
                    derive_seed(master, Phase.SPECIALIST_EVAL, position[m]),
                    config.rewards,
                )
                for m in cluster.members
            ]
            specialist_rates.update(zip(cluster.members, rates))
            summaries.append(
                SpecialistSummary(
                    index=i,
                    size=len(cluster.members),
                    average=sum(rates) / len(rates) if rates else 0.0,
                )
            )
        specialist_samples = sum(s.samples_used - generalist.samples_used for s in specialists)

    with _phase("demos"):
        source_of = {
            m: specialists[i] for i, c in enumerate(partition.clusters) for m in c.members
        }
        demos = []
        attempts = {}
        shortfall = 0
        for i, v in enumerate(variations):
            collection = collect_demos(
                source_of.get(v.id, generalist),
                v,
                config.demos_per_variation,
                derive_seed(master, Phase.DEMOS, i),
                success_only=config.demo_success_only,
                max_attempts=config.demo_attempts_factor * config.demos_per_variation,
                rewards=config.rewards,
            )
            demos.extend(collection.trajectories)
            attempts[v.id] = collection.attempts
            shortfall += collection.shortfall
        log.info(f"Collected {len(demos)} demonstrations (shortfall {shortfall})")

    with _phase("finetune"):
        resumed = clone_learner(
            generalist, config.reset_exploration, config.finetune_epsilon
        )
        refine_on = (
            [by_id[m] for m in selected] if config.finetune_scope == "selected" else variations
        )
        tuned = finetune_generalist(
            resumed,
            demos,
            config.budget_finetune,
            derive_seed(master, Phase.FINETUNE),
            refine_on,
            config.rewards,
        )

    with _phase("final_eval"):
        final_rates = {
            v.id: evaluate(
                tuned,
                v,
                config.eval_episodes,
                derive_seed(master, Phase.FINAL_EVAL, i),
                config.rewards,
            )
            for i, v in enumerate(variations)
        }
        final_stats = summarize(final_rates)

    return RunResult(
        config=config,
        method=partition_method,
        variations=variations,
        features=features,
        pca=pca,
        projected=projected,
        scatter_points=scatter,
        partition=partition,
        phase1_rates=phase1_rates,
        phase1_stats=phase1_stats,
        selected=selected,
        specialist_rates=specialist_rates,
        specialists=summaries,
        final_rates=final_rates,
        final_stats=final_stats,
        demo_trajectories=len(demos),
        demo_shortfall=shortfall,
        specialist_samples=specialist_samples,
        demo_attempts=attempts,
    )
