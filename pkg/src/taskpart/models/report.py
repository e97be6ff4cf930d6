"""Data models for evaluation statistics, comparison tables and run manifests."""

from typing import Literal

from pydantic import BaseModel, Field


class EvalStats(BaseModel):
    """Success-rate statistics over a set of variations."""

    per_variation: dict[str, float]
    average: float
    median: float
    high: float
    low: float
    upper_quartile: float
    lower_quartile: float


class SelectionRule(BaseModel):
    """Which variations count as low performers."""

    kind: Literal["below_median", "worst_n"] = "below_median"
    n: int | None = None

    @classmethod
    def below_median(cls) -> "SelectionRule":
        return cls(kind="below_median")

    @classmethod
    def worst(cls, n: int) -> "SelectionRule":
        return cls(kind="worst_n", n=n)


class ComparisonRow(BaseModel):
    """One row of a method comparison: agent label, specialist count, statistics."""

    label: str
    n_specialists: int | None = None
    stats: EvalStats


class ComparisonTable(BaseModel):
    """A comparison rendered both as Markdown and as CSV."""

    markdown: str
    csv: str


class SpecialistSummary(BaseModel):
    """Size and average success of one specialist on its own cluster."""

    index: int
    size: int
    average: float


class ArtifactEntry(BaseModel):
    """One file written into a run directory."""

    name: str
    sha256: str
    size: int


class RunManifest(BaseModel):
    """Index of a run directory. Contains no timestamps so reruns are identical."""

    method: str
    n_specialists: int
    master_seed: int
    n_selected: int
    demo_trajectories: int
    demo_shortfall: int
    files: list[ArtifactEntry] = Field(default_factory=list)


class ProtocolArm(BaseModel):
    """A partition method paired with a specialist count."""

    method: str
    n_specialists: int = Field(ge=1)

    @property
    def name(self) -> str:
        return f"{self.method}/k={self.n_specialists}"


class ProtocolRecord(BaseModel):
    """Outcome of one arm on one seed. Averages are over the selected variations."""

    arm: ProtocolArm
    seed: int
    phase1_selected_average: float
    specialist_average: float
    final_selected_average: float
    sizes: list[int]
    specialist_averages: list[float]
    archetype_ari: float


class ArmSummary(BaseModel):
    """Means of one arm across every seed."""

    arm: ProtocolArm
    runs: int
    phase1_selected_average: float
    specialist_average: float
    final_selected_average: float
    mean_size_spread: float


class ProtocolResult(BaseModel):
    """Every record of a protocol sweep plus per-arm summaries."""

    seeds: list[int]
    records: list[ProtocolRecord]
    arms: list[ArmSummary]

    def for_arm(self, arm: ProtocolArm) -> list[ProtocolRecord]:
        return sorted((r for r in self.records if r.arm == arm), key=lambda r: r.seed)

    def paired_wins(self, first: ProtocolArm, second: ProtocolArm) -> int:
        """Seeds on which ``first`` has a strictly higher specialist average."""
        theirs = {r.seed: r.specialist_average for r in self.for_arm(second)}
        return sum(
            1
            for r in self.for_arm(first)
            if r.seed in theirs and r.specialist_average > theirs[r.seed]
        )
