"""Data models."""

from taskpart.models.cloud import CloudFormat, PointCloud
from taskpart.models.features import (
    DescriptorSpec,
    FeatureMatrix,
    FeatureVector,
    PcaModel,
    PcaModelDocument,
)
from taskpart.models.partition import (
    Centroids,
    ClusterAssignment,
    Partition,
    PartitionMethod,
)
from taskpart.models.report import (
    ArmSummary,
    ArtifactEntry,
    ComparisonRow,
    ComparisonTable,
    EvalStats,
    ProtocolArm,
    ProtocolRecord,
    ProtocolResult,
    RunManifest,
    SelectionRule,
    SpecialistSummary,
)
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

__all__ = [
    # Point clouds
    "CloudFormat",
    "PointCloud",
    # Features
    "DescriptorSpec",
    "FeatureVector",
    "FeatureMatrix",
    "PcaModel",
    "PcaModelDocument",
    # Partitions
    "PartitionMethod",
    "Centroids",
    "ClusterAssignment",
    "Partition",
    # Simulator
    "Action",
    "Interaction",
    "VariationSpec",
    "TrainingBudget",
    "Hyperparameters",
    "RewardConfig",
    "LearnerState",
    "TrajectoryStep",
    "Trajectory",
    "RunConfig",
    # Reports
    "EvalStats",
    "SelectionRule",
    "ComparisonRow",
    "ComparisonTable",
    "SpecialistSummary",
    "ArtifactEntry",
    "RunManifest",
    "ProtocolArm",
    "ProtocolRecord",
    "ArmSummary",
    "ProtocolResult",
]
