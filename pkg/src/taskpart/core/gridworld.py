"""Gridworld task family, tabular Q-learning and demonstration-guided fine-tuning.

Every variation places a handle (a small set of cells) somewhere on a square
grid; the agent must walk onto a handle cell and turn it in the right
direction. The learner only observes its own cell, not which variation it
is in, so variations whose handles sit in different places pull a shared
policy in different directions.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from taskpart.core.errors import EmptyInput, InvalidBudget, InvalidConfig
from taskpart.core.seeding import Phase, derive_seed
from taskpart.models.cloud import PointCloud
from taskpart.models.simulation import (
    Action,
    Hyperparameters,
    Interaction,
    LearnerState,
    RewardConfig,
    RunConfig,
    TrainingBudget,
    Trajectory,
    TrajectoryStep,
    VariationSpec,
)

log = logging.getLogger(__name__)

# Handle templates as (dx, dy) offsets from an anchor cell. Archetypes 0 and 2
# are a horizontal and a vertical bar crossing at the grid centre; the others
# are a 2x2 block with one extra cell, each parked in its own corner.
HANDLE_TEMPLATES: tuple[tuple[tuple[int, int], ...], ...] = (
    ((-2, 0), (-1, 0), (0, 0), (1, 0), (2, 0)),
    ((0, 0), (1, 0), (0, 1), (1, 1), (-1, 0)),
    ((0, -2), (0, -1), (0, 0), (0, 1), (0, 2)),
    ((0, 0), (1, 0), (0, 1), (1, 1), (1, -1)),
    ((0, 0), (1, 0), (0, 1), (1, 1), (-1, 1)),
    ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0)),
)

# Axes along which a variation may be shifted by one cell. Bars only slide
# along their length so that the crossing cell stays covered.
JITTER_AXES: tuple[tuple[int, int], ...] = (
    (1, 0),
    (1, 1),
    (0, 1),
    (1, 1),
    (1, 1),
    (1, 1),
)

# Height of each template cell in the emitted point cloud.
HEIGHT_PROFILES: tuple[tuple[float, ...], ...] = (
    (0.0, 1.0, 0.0, 1.0, 0.0),
    (0.0, 0.0, 0.0, 0.0, 3.0),
    (0.0, 0.0, 2.0, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.0),
    (2.0, 0.0, 0.0, 0.0, 0.0),
    (0.0, 1.0, 2.0, 1.0, 0.0),
)

# Home region of each archetype, as fractions of the grid extent.
REGION_CENTERS: tuple[tuple[float, float], ...] = (
    (0.5, 0.5),
    (0.85, 0.1),
    (0.5, 0.5),
    (0.1, 0.85),
    (0.1, 0.1),
    (0.85, 0.85),
)

MAX_ARCHETYPES = len(HANDLE_TEMPLATES)

MOVES: dict[Action, tuple[int, int]] = {
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}

N_ACTIONS = len(Action)


# -----------------------------------------------------------------------------
# Task family
# -----------------------------------------------------------------------------


def interaction_for(archetype: int) -> Interaction:
    return Interaction.CW if archetype % 2 == 0 else Interaction.CCW


def _anchor(archetype: int, grid: int) -> tuple[int, int]:
    """Anchor cell of a template so that it and its +1 shift fit on the grid."""
    template = HANDLE_TEMPLATES[archetype]
    fx, fy = REGION_CENTERS[archetype]
    xs = [dx for dx, _ in template]
    ys = [dy for _, dy in template]
    x = round(fx * (grid - 1))
    y = round(fy * (grid - 1))
    x = min(max(x, -min(xs)), grid - 2 - max(xs))
    y = min(max(y, -min(ys)), grid - 2 - max(ys))
    return x, y


def _archetype_sequence(counts: Sequence[int]) -> list[int]:
    """Round-robin labels that honour ``counts``."""
    remaining = list(counts)
    labels: list[int] = []
    while any(remaining):
        for archetype, left in enumerate(remaining):
            if left:
                labels.append(archetype)
                remaining[archetype] -= 1
    return labels


def generate_variations(config: RunConfig) -> list[VariationSpec]:
    """Build the task family described by ``config``."""
    g = config.g_archetypes
    if not 2 <= g <= MAX_ARCHETYPES:
        raise InvalidConfig(f"g_archetypes must be in 2..{MAX_ARCHETYPES}, got {g}")
    if config.n_variations < g:
        raise InvalidConfig("n_variations must be at least g_archetypes")
    widest = max(
        max(c[axis] for c in t) - min(c[axis] for c in t)
        for t in HANDLE_TEMPLATES
        for axis in (0, 1)
    )
    if config.grid < widest + 2:
        raise InvalidConfig(f"grid must be at least {widest + 2} cells wide")

    if config.archetype_counts is not None:
        counts = list(config.archetype_counts)
    else:
        base, extra = divmod(config.n_variations, g)
        counts = [base + (1 if a < extra else 0) for a in range(g)]

    rng = np.random.default_rng(derive_seed(config.master_seed, Phase.VARIATIONS))
    variations = []
    for index, archetype in enumerate(_archetype_sequence(counts)):
        if counts[archetype] == 1:
            jx, jy = 0, 0
        else:
            mx, my = JITTER_AXES[archetype]
            jx, jy = (int(v) for v in rng.integers(0, 2, size=2) * (mx, my))
        ax, ay = _anchor(archetype, config.grid)
        cells = [(ax + dx + jx, ay + dy + jy) for dx, dy in HANDLE_TEMPLATES[archetype]]
        variations.append(
            VariationSpec(
                id=f"v{index:03d}",
                archetype=archetype,
                grid=config.grid,
                handle_cells=cells,
                interaction=interaction_for(archetype),
                max_steps=config.max_steps,
            )
        )
    log.info(f"Generated {len(variations)} variations, archetype counts {counts}")
    return variations


def variation_point_cloud(
    v: VariationSpec, noise_sigma: float, seed: int, points_per_cell: int = 1
) -> PointCloud:
    """One point per handle cell (or ``points_per_cell``) at its archetype height."""
    if points_per_cell < 1:
        raise ValueError("points_per_cell must be positive")
    heights = HEIGHT_PROFILES[v.archetype]
    base = np.array(
        [
            (float(x), float(y), heights[i])
            for i, (x, y) in enumerate(v.handle_cells)
            for _ in range(points_per_cell)
        ]
    )
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        base = base + rng.normal(0.0, noise_sigma, size=base.shape)
    return PointCloud(id=v.id, points=base)


# -----------------------------------------------------------------------------
# Environment
# -----------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _transitions(grid: int) -> np.ndarray:
    """``(cells, 4)`` next-cell table for the move actions; walls block."""
    table = np.empty((grid * grid, len(MOVES)), dtype=np.intp)
    for y in range(grid):
        for x in range(grid):
            for action, (dx, dy) in MOVES.items():
                nx = min(max(x + dx, 0), grid - 1)
                ny = min(max(y + dy, 0), grid - 1)
                table[y * grid + x, action] = ny * grid + nx
    return table


def cell_index(cell: tuple[int, int], grid: int) -> int:
    return cell[1] * grid + cell[0]


def cell_coords(index: int, grid: int) -> tuple[int, int]:
    return index % grid, index // grid


@dataclass(frozen=True)
class _Task:
    id: str
    grid: int
    handles: frozenset[int]
    correct: int
    starts: np.ndarray
    max_steps: int

    @classmethod
    def of(cls, v: VariationSpec) -> "_Task":
        handles = frozenset(cell_index(c, v.grid) for c in v.handle_cells)
        starts = np.array([c for c in range(v.grid * v.grid) if c not in handles])
        if len(starts) == 0:
            starts = np.array(sorted(handles))
        return cls(
            id=v.id,
            grid=v.grid,
            handles=handles,
            correct=int(v.interaction.action),
            starts=starts,
            max_steps=v.max_steps,
        )


class _Outcome(NamedTuple):
    cell: int
    reward: float
    success: bool
    done: bool


def _step(task: _Task, cell: int, action: int, rewards: RewardConfig) -> _Outcome:
    if action < len(MOVES):
        next_cell = int(_transitions(task.grid)[cell, action])
        return _Outcome(next_cell, rewards.step_penalty, False, False)
    if action == task.correct and cell in task.handles:
        return _Outcome(cell, rewards.success_reward, True, True)
    return _Outcome(
        cell, rewards.wrong_interaction_penalty, False, rewards.wrong_interaction_ends_episode
    )


def _greedy_success(q: np.ndarray, task: _Task, start: int, ends_on_wrong: bool) -> bool:
    cell = start
    transitions = _transitions(task.grid)
    for _ in range(task.max_steps):
        action = int(np.argmax(q[cell]))
        if action < len(MOVES):
            cell = int(transitions[cell, action])
        elif action == task.correct and cell in task.handles:
            return True
        elif ends_on_wrong:
            return False
    return False


def _greedy_rollout(
    q: np.ndarray, task: _Task, start: int, rewards: RewardConfig
) -> Trajectory:
    cell = start
    steps = []
    success = False
    for _ in range(task.max_steps):
        action = int(np.argmax(q[cell]))
        outcome = _step(task, cell, action, rewards)
        steps.append(
            TrajectoryStep(
                cell=cell_coords(cell, task.grid),
                action=Action(action),
                reward=outcome.reward,
            )
        )
        success = outcome.success
        if outcome.done:
            break
        cell = outcome.cell
    return Trajectory(variation_id=task.id, steps=steps, success=success)


# -----------------------------------------------------------------------------
# Learners
# -----------------------------------------------------------------------------


def new_learner(grid: int, hyper: Hyperparameters | None = None) -> LearnerState:
    """Zero-initialized q table for a ``grid`` x ``grid`` world."""
    return LearnerState(
        q=np.zeros((grid * grid, N_ACTIONS)),
        hyper=(hyper or Hyperparameters()).model_copy(),
    )


def clone_learner(
    learner: LearnerState, reset_exploration: bool = False, epsilon: float | None = None
) -> LearnerState:
    """Exact copy of ``learner``; optionally restart exploration at ``epsilon``."""
    clone = learner.copy()
    if reset_exploration and epsilon is not None:
        clone.hyper = clone.hyper.model_copy(update={"epsilon": epsilon})
    return clone


class PlateauDetector:
    """Flags when the moving-average success rate stops changing.

    Compares the mean success of the latest ``window`` episodes with the
    window before it; a difference below ``threshold`` counts as a plateau.
    """

    def __init__(self, window: int = 200, threshold: float = 0.005):
        self.window = window
        self.threshold = threshold
        self._outcomes: list[bool] = []

    def record(self, success: bool) -> bool:
        self._outcomes.append(success)
        if len(self._outcomes) < 2 * self.window:
            return False
        recent = self._outcomes[-self.window :]
        before = self._outcomes[-2 * self.window : -self.window]
        return abs(sum(recent) - sum(before)) / self.window < self.threshold


def train(
    learner: LearnerState,
    variations: Sequence[VariationSpec],
    budget: TrainingBudget,
    seed: int,
    rewards: RewardConfig | None = None,
    shaping: dict[int, int] | None = None,
    plateau: PlateauDetector | None = None,
) -> LearnerState:
    """Run ``budget.n_sample`` episodes of epsilon-greedy tabular Q-learning.

    ``shaping`` maps a cell index to a preferred action; taking it there earns
    ``rewards.demo_bonus`` on top of the environment reward, once per cell and
    episode. A ``plateau`` detector may end training early.
    """
    if budget.n_sample < 0:
        raise InvalidBudget(f"n_sample must be non-negative, got {budget.n_sample}")
    state = learner.copy()
    if budget.n_sample == 0:
        return state
    if not variations:
        raise EmptyInput("train needs at least one variation")

    rewards = rewards or RewardConfig()
    tasks = [_Task.of(v) for v in variations]
    rng = np.random.default_rng(seed)
    q = state.q
    alpha, gamma = state.hyper.alpha, state.hyper.gamma
    epsilon = state.hyper.epsilon
    bonus = rewards.demo_bonus
    shaping = shaping or {}

    episodes = 0
    for _ in range(budget.n_sample):
        task = tasks[int(rng.integers(0, len(tasks)))]
        cell = int(rng.choice(task.starts))
        success = False
        rewarded: set[int] = set()
        for _ in range(task.max_steps):
            if rng.random() < epsilon:
                action = int(rng.integers(0, N_ACTIONS))
            else:
                action = int(np.argmax(q[cell]))
            outcome = _step(task, cell, action, rewards)
            reward = outcome.reward
            if shaping.get(cell) == action and cell not in rewarded:
                reward += bonus
                rewarded.add(cell)
            if outcome.done:
                target = reward
            else:
                target = reward + gamma * float(q[outcome.cell].max())
            q[cell, action] += alpha * (target - q[cell, action])
            success = outcome.success
            if outcome.done:
                break
            cell = outcome.cell
        episodes += 1
        epsilon *= state.hyper.epsilon_decay
        if plateau is not None and plateau.record(success):
            log.info(f"Success rate plateaued after {episodes} episodes")
            break

    state.samples_used += episodes
    state.hyper = state.hyper.model_copy(update={"epsilon": epsilon})
    return state


def evaluate(
    learner: LearnerState,
    v: VariationSpec,
    episodes: int,
    seed: int,
    rewards: RewardConfig | None = None,
) -> float:
    """Fraction of greedy rollouts from random start cells that succeed."""
    if episodes < 1:
        raise ValueError("episodes must be positive")
    ends_on_wrong = (rewards or RewardConfig()).wrong_interaction_ends_episode
    task = _Task.of(v)
    rng = np.random.default_rng(seed)
    starts = rng.choice(task.starts, size=episodes)
    outcome: dict[int, bool] = {}
    wins = 0
    for start in starts.tolist():
        if start not in outcome:
            outcome[start] = _greedy_success(learner.q, task, start, ends_on_wrong)
        wins += outcome[start]
    return wins / episodes


# -----------------------------------------------------------------------------
# Demonstrations
# -----------------------------------------------------------------------------


@dataclass
class DemoCollection:
    """Demonstrations for one variation plus how many rollouts it took."""

    variation_id: str
    requested: int
    trajectories: list[Trajectory] = field(default_factory=list)
    attempts: int = 0

    @property
    def shortfall(self) -> int:
        return self.requested - len(self.trajectories)


def collect_demos(
    learner: LearnerState,
    v: VariationSpec,
    count: int,
    seed: int,
    success_only: bool = True,
    max_attempts: int | None = None,
    rewards: RewardConfig | None = None,
) -> DemoCollection:
    """Greedy rollouts from random starts; failures are retried when ``success_only``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    max_attempts = 20 * count if max_attempts is None else max_attempts
    rewards = rewards or RewardConfig()
    collection = DemoCollection(variation_id=v.id, requested=count)
    if count == 0:
        return collection

    task = _Task.of(v)
    rng = np.random.default_rng(seed)
    cache: dict[int, Trajectory] = {}
    while len(collection.trajectories) < count and collection.attempts < max_attempts:
        start = int(rng.choice(task.starts))
        collection.attempts += 1
        if start not in cache:
            cache[start] = _greedy_rollout(learner.q, task, start, rewards)
        trajectory = cache[start]
        if success_only and not trajectory.success:
            continue
        collection.trajectories.append(trajectory.model_copy(deep=True))

    if collection.shortfall:
        log.warning(
            f"Collected {len(collection.trajectories)}/{count} demonstrations "
            f"for {v.id} after {collection.attempts} attempts"
        )
    return collection


def demo_majority(demos: Sequence[Trajectory], grid: int) -> dict[int, int]:
    """Most frequent demonstrated action per cell; ties go to the action seen first."""
    counts: dict[int, dict[int, int]] = {}
    for trajectory in demos:
        for step in trajectory.steps:
            per_cell = counts.setdefault(cell_index(step.cell, grid), {})
            per_cell[int(step.action)] = per_cell.get(int(step.action), 0) + 1
    # dicts keep insertion order, and max() returns the first maximal item
    return {
        cell: max(per_cell, key=lambda a: per_cell[a]) for cell, per_cell in counts.items()
    }


def finetune_generalist(
    generalist: LearnerState,
    demos: Sequence[Trajectory],
    budget: TrainingBudget,
    seed: int,
    variations: Sequence[VariationSpec] = (),
    rewards: RewardConfig | None = None,
) -> LearnerState:
    """Behavior-clone the demonstrations into the q table, then refine with shaping."""
    rewards = rewards or RewardConfig()
    grid = int(round(np.sqrt(generalist.q.shape[0])))
    tuned = generalist.copy()
    majority = demo_majority(demos, grid)
    for cell, action in majority.items():
        row = tuned.q[cell]
        others = np.delete(row, action).max()
        row[action] = max(row[action], others + rewards.bc_margin)
    log.info(f"Behavior cloning set the greedy action at {len(majority)} cell(s)")

    if budget.n_sample == 0:
        return tuned
    return train(tuned, variations, budget, seed, rewards, shaping=majority)
