"""Seed sweeps over (partition method, specialist count) arms.

Each arm runs the full pipeline once per master seed. Two arms that share a
seed share their Phase 1 generalist and low-performer set, so their
specialist averages can be compared seed by seed.
"""

import csv
import io
import logging
from collections.abc import Sequence
from dataclasses import dataclass

from taskpart.core.errors import EmptyInput, InvalidConfig
from taskpart.core.gsl_pipeline import run_gsl_pipeline
from taskpart.core.parallel import ordered_map
from taskpart.core.report_writer import percent
from taskpart.core.statistics import archetype_recovery
from taskpart.models.partition import PartitionMethod
from taskpart.models.report import (
    ArmSummary,
    ComparisonTable,
    ProtocolArm,
    ProtocolRecord,
    ProtocolResult,
)
from taskpart.models.simulation import RunConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProtocolJob:
    """One (arm, seed) pipeline run; picklable for the process pool."""

    config: RunConfig
    arm: ProtocolArm
    seed: int


def _config_for(config: RunConfig, arm: ProtocolArm, seed: int) -> RunConfig:
    data = config.model_dump()
    data.update(master_seed=seed, n_specialists=arm.n_specialists)
    try:
        return RunConfig.model_validate(data)
    except ValueError as e:
        raise InvalidConfig(f"arm {arm.name}, seed {seed}: {e}")


def run_protocol_job(job: ProtocolJob) -> ProtocolRecord:
    """Run the pipeline for one arm and seed and keep the numbers a sweep needs."""
    result = run_gsl_pipeline(job.config, PartitionMethod(job.arm.method), workers=1)
    truth = {v.id: v.archetype for v in result.variations}
    log.info(
        f"{job.arm.name} seed {job.seed}: specialists "
        f"{result.specialist_average:.3f}, sizes {result.partition.sizes}"
    )
    return ProtocolRecord(
        arm=job.arm,
        seed=job.seed,
        phase1_selected_average=result.phase1_selected_average,
        specialist_average=result.specialist_average,
        final_selected_average=result.final_selected_average,
        sizes=result.partition.sizes,
        specialist_averages=[s.average for s in result.specialists],
        archetype_ari=archetype_recovery(result.partition, truth),
    )


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _summarize_arm(arm: ProtocolArm, records: list[ProtocolRecord]) -> ArmSummary:
    return ArmSummary(
        arm=arm,
        runs=len(records),
        phase1_selected_average=_mean([r.phase1_selected_average for r in records]),
        specialist_average=_mean([r.specialist_average for r in records]),
        final_selected_average=_mean([r.final_selected_average for r in records]),
        mean_size_spread=_mean([max(r.sizes) - min(r.sizes) for r in records]),
    )


def run_protocol(
    config: RunConfig,
    arms: Sequence[ProtocolArm],
    seeds: Sequence[int],
    workers: int = 1,
) -> ProtocolResult:
    """Run every arm on every seed.

    ``config`` supplies everything except the master seed and the specialist
    count, which come from the seed list and the arm. Runs are fanned out over
    ``workers`` processes; the records do not depend on it.
    """
    if not arms:
        raise EmptyInput("protocol needs at least one arm")
    if not seeds:
        raise EmptyInput("protocol needs at least one seed")
    for arm in arms:
        try:
            PartitionMethod(arm.method)
        except ValueError:
            raise InvalidConfig(f"unknown partition method '{arm.method}'")

    jobs = [
        ProtocolJob(config=_config_for(config, arm, seed), arm=arm, seed=seed)
        for arm in arms
        for seed in seeds
    ]
    log.info(f"Running {len(jobs)} pipeline(s) over {len(arms)} arm(s)")
    records = ordered_map(run_protocol_job, jobs, workers)

    summaries = [
        _summarize_arm(arm, [r for r in records if r.arm == arm]) for arm in arms
    ]
    return ProtocolResult(seeds=list(seeds), records=records, arms=summaries)


def protocol_table(result: ProtocolResult) -> ComparisonTable:
    """Per-arm means as Markdown, every (arm, seed) record as CSV."""
    lines = [
        "| Agent | Number of Specialists | Phase 1 | Specialists | Phase 3 "
        "| Size Spread | Runs |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    for s in result.arms:
        label = PartitionMethod(s.arm.method).label
        lines.append(
            f"| {label} | {s.arm.n_specialists} | "
            f"{percent(s.phase1_selected_average)} | {percent(s.specialist_average)} | "
            f"{percent(s.final_selected_average)} | "
            f"{s.mean_size_spread:.2f} | {s.runs} |"
        )
    if len(result.arms) >= 2:
        first, second = result.arms[0].arm, result.arms[1].arm
        wins = result.paired_wins(first, second)
        lines += [
            "",
            f"{first.name} beats {second.name} on {wins} of "
            f"{len(result.seeds)} paired seed(s).",
        ]

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [
            "method",
            "n_specialists",
            "seed",
            "phase1_selected_average",
            "specialist_average",
            "final_selected_average",
            "sizes",
            "archetype_ari",
        ]
    )
    for r in result.records:
        writer.writerow(
            [
                r.arm.method,
                r.arm.n_specialists,
                r.seed,
                repr(r.phase1_selected_average),
                repr(r.specialist_average),
                repr(r.final_selected_average),
                " ".join(str(s) for s in r.sizes),
                repr(r.archetype_ari),
            ]
        )
    return ComparisonTable(markdown="\n".join(lines) + "\n", csv=buffer.getvalue())
