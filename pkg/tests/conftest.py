"""Shared fixtures."""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from taskpart.core.gridworld import MOVES, N_ACTIONS, cell_coords
from taskpart.models.simulation import LearnerState, RunConfig, TrainingBudget, VariationSpec

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def tiny_config() -> RunConfig:
    """Four variations, one per archetype, with short budgets."""
    return RunConfig(
        n_variations=4,
        g_archetypes=4,
        n_specialists=4,
        n_low=4,
        budget_phase1=TrainingBudget(n_sample=300),
        budget_specialist=TrainingBudget(n_sample=200),
        budget_finetune=TrainingBudget(n_sample=100),
        demos_per_variation=2,
        eval_episodes=10,
    )


@pytest.fixture
def small_config() -> RunConfig:
    """Sixteen variations over four archetypes; runs in a few seconds."""
    return RunConfig(
        n_variations=16,
        g_archetypes=4,
        n_specialists=2,
        budget_phase1=TrainingBudget(n_sample=600),
        budget_specialist=TrainingBudget(n_sample=400),
        budget_finetune=TrainingBudget(n_sample=300),
        demos_per_variation=3,
        eval_episodes=20,
    )


def perfect_q(v: VariationSpec) -> np.ndarray:
    """q table whose greedy policy walks straight to the nearest handle cell and turns it."""
    handles = [tuple(c) for c in v.handle_cells]
    q = np.zeros((v.grid * v.grid, N_ACTIONS))
    for index in range(v.grid * v.grid):
        x, y = cell_coords(index, v.grid)
        if (x, y) in handles:
            q[index, int(v.interaction.action)] = 1.0
            continue
        tx, ty = min(handles, key=lambda h: (abs(h[0] - x) + abs(h[1] - y), h))
        for action, (dx, dy) in MOVES.items():
            if abs(tx - x - dx) + abs(ty - y - dy) < abs(tx - x) + abs(ty - y):
                q[index, int(action)] = 1.0
                break
    return q


@pytest.fixture
def perfect_learner() -> Callable[[VariationSpec], LearnerState]:
    return lambda v: LearnerState(q=perfect_q(v))
