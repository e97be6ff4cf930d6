"""Data models for the gridworld simulator and run configuration."""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from taskpart.models.features import DescriptorSpec


class Action(IntEnum):
    """The six discrete actions of the gridworld."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    INTERACT_CW = 4
    INTERACT_CCW = 5


class Interaction(str, Enum):
    """Direction a handle must be turned."""

    CW = "cw"
    CCW = "ccw"

    @property
    def action(self) -> Action:
        return Action.INTERACT_CW if self is Interaction.CW else Action.INTERACT_CCW


class VariationSpec(BaseModel):
    """One synthetic task variation: where the handle is and how to turn it."""

    id: str
    archetype: int = Field(ge=0)
    grid: int = Field(default=9, ge=2)
    handle_cells: list[tuple[int, int]]
    interaction: Interaction
    max_steps: int = Field(default=50, ge=1)

    @model_validator(mode="after")
    def _check_handle_cells(self) -> "VariationSpec":
        if not self.handle_cells:
            raise ValueError("handle_cells must not be empty")
        for x, y in self.handle_cells:
            if not (0 <= x < self.grid and 0 <= y < self.grid):
                raise ValueError(f"handle cell {(x, y)} outside {self.grid}x{self.grid}")
        return self


class TrainingBudget(BaseModel):
    """Episodes per training call."""

    n_sample: int = 0


class Hyperparameters(BaseModel):
    """Tabular Q-learning hyper-parameters."""

    alpha: float = Field(default=0.1, gt=0.0, le=1.0)
    gamma: float = Field(default=0.95, ge=0.0, le=1.0)
    epsilon: float = Field(default=0.2, ge=0.0, le=1.0)
    epsilon_decay: float = Field(default=0.999, gt=0.0, le=1.0)


class RewardConfig(BaseModel):
    """Reward constants of the gridworld and the demonstration shaping bonus."""

    step_penalty: float = -0.01
    success_reward: float = 1.0
    wrong_interaction_penalty: float = -0.2
    wrong_interaction_ends_episode: bool = True
    # Paid at most once per cell per episode.
    demo_bonus: float = 0.005
    bc_margin: float = Field(default=0.1, gt=0.0)


@dataclass
class LearnerState:
    """Tabular policy/value state plus training bookkeeping.

    ``q`` has one row per grid cell (``y * grid + x``) and one column per ``Action``.
    """

    q: np.ndarray
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    samples_used: int = 0

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.q.ndim != 2 or self.q.shape[1] != len(Action):
            raise ValueError(f"q must have shape (cells, {len(Action)}), got {self.q.shape}")
        if not np.all(np.isfinite(self.q)):
            raise ValueError("q values must be finite")

    def copy(self) -> "LearnerState":
        return LearnerState(
            q=self.q.copy(),
            hyper=self.hyper.model_copy(),
            samples_used=self.samples_used,
        )


class TrajectoryStep(BaseModel):
    cell: tuple[int, int]
    action: Action
    reward: float


class Trajectory(BaseModel):
    """One rollout on one variation."""

    variation_id: str
    steps: list[TrajectoryStep] = Field(default_factory=list)
    success: bool = False


class RunConfig(BaseModel):
    """Everything a pipeline run depends on. Read from a single JSON document."""

    # Task family
    n_variations: int = Field(default=60, ge=1)
    g_archetypes: int = Field(default=4, ge=2)
    archetype_counts: list[int] | None = None
    grid: int = Field(default=9, ge=5)
    max_steps: int = Field(default=50, ge=1)

    # GSL loop
    n_low: int | None = Field(default=None, ge=1)
    n_specialists: int = Field(default=4, ge=1)
    budget_phase1: TrainingBudget = TrainingBudget(n_sample=6000)
    budget_specialist: TrainingBudget = TrainingBudget(n_sample=4000)
    budget_finetune: TrainingBudget = TrainingBudget(n_sample=3000)
    demos_per_variation: int = Field(default=10, ge=0)
    demo_success_only: bool = True
    demo_attempts_factor: int = Field(default=20, ge=1)
    eval_episodes: int = Field(default=100, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    reset_exploration: bool = True
    finetune_epsilon: float = Field(default=0.02, ge=0.0, le=1.0)
    finetune_scope: Literal["selected", "all"] = "selected"
    phase1_plateau: bool = False
    plateau_window: int = Field(default=200, ge=1)
    plateau_threshold: float = Field(default=0.005, ge=0.0)

    # Features and partitioning
    feature_noise_sigma: float = Field(default=0.05, ge=0.0)
    descriptor: DescriptorSpec = DescriptorSpec()
    pca_components: int = Field(default=2, ge=1)
    pca_fit_scope: Literal["selected", "all"] = "selected"
    kmeans_restarts: int = Field(default=10, ge=1)
    kmeans_max_iter: int = Field(default=300, ge=1)
    kmeans_tol: float = Field(default=1e-8, gt=0.0)
    capacity_rule: Literal["floor_extra", "ceil"] = "floor_extra"

    # Learner
    hyper: Hyperparameters = Hyperparameters()
    rewards: RewardConfig = RewardConfig()

    @field_validator("budget_phase1", "budget_specialist", "budget_finetune")
    @classmethod
    def _non_negative_budget(cls, budget: TrainingBudget) -> TrainingBudget:
        if budget.n_sample < 0:
            raise ValueError("training budgets must be non-negative")
        return budget

    @model_validator(mode="after")
    def _check_counts(self) -> "RunConfig":
        if self.n_variations < self.g_archetypes:
            raise ValueError(
                f"n_variations ({self.n_variations}) must be >= "
                f"g_archetypes ({self.g_archetypes})"
            )
        if self.n_low is not None and not (
            self.n_specialists <= self.n_low <= self.n_variations
        ):
            raise ValueError("require n_specialists <= n_low <= n_variations")
        if self.n_specialists > self.n_variations:
            raise ValueError("n_specialists must not exceed n_variations")
        if self.archetype_counts is not None:
            if len(self.archetype_counts) != self.g_archetypes:
                raise ValueError("archetype_counts needs one entry per archetype")
            if any(c < 1 for c in self.archetype_counts):
                raise ValueError("every archetype needs at least one variation")
            if sum(self.archetype_counts) != self.n_variations:
                raise ValueError("archetype_counts must sum to n_variations")
        return self
