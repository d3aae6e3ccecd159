"""Desk-scale reproductions of the learning-rate and reward-weight studies.

Each (variant, seed) session is independent, so sessions may run in worker
processes; aggregation always happens afterwards in (variant, seed, round)
order so the CSV does not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..config import build_pool
from ..core import PolicyKind
from ..engine import Session, run_round, session_metrics
from ..scoring import OracleScorer
from .spec import ExperimentSpec, InvalidSpec, PolicyVariant

BETA_SWEEP_COLUMNS = ("beta", "mean_convergence_rounds", "mean_normalized_reward", "mean_post_convergence_score")
WEIGHT_STUDY_COLUMNS = (
    "policy_variant",
    "round",
    "running_avg_cost",
    "running_avg_latency_ms",
    "total_cost",
    "mean_latency_ms",
)


def simulated_session(spec: ExperimentSpec, variant: PolicyVariant, seed: int) -> Session:
    config = spec.session_config(variant, seed)
    pool, registry = build_pool(spec.pool_specs, latency_floor=config.latency_floor)
    return Session(config=config, pool=pool, registry=registry, scorer=OracleScorer())


def _prompt(round_index: int) -> str:
    return f"simulated query {round_index}"


@dataclass(frozen=True)
class SweepSessionResult:
    convergence_rounds: int
    converged: bool
    converged_arm: int | None
    mean_normalized_reward: float
    mean_post_convergence_score: float


@dataclass(frozen=True)
class TraceResult:
    costs: np.ndarray
    latencies: np.ndarray
    arms: np.ndarray
    converged_arm: int | None


def run_sweep_session(spec: ExperimentSpec, variant: PolicyVariant, seed: int) -> SweepSessionResult:
    """Learn until pinned (or the query budget runs out), then serve the
    post-convergence queries and score them."""
    session = simulated_session(spec, variant, seed)
    while session.pinned is None and len(session.records) < spec.queries_per_session:
        run_round(session, _prompt(session.round))
    learned = len(session.records)
    for _ in range(spec.post_convergence_queries):
        run_round(session, _prompt(session.round))
    metrics = session_metrics(session)
    post = session.records[learned:]
    post_score = math.fsum(r.accuracy for r in post) / len(post) if post else float("nan")
    return SweepSessionResult(
        convergence_rounds=metrics.rounds_to_convergence or learned,
        converged=session.pinned is not None,
        converged_arm=session.pinned,
        mean_normalized_reward=metrics.mean_normalized_reward,
        mean_post_convergence_score=post_score,
    )


def run_trace_session(spec: ExperimentSpec, variant: PolicyVariant, seed: int) -> TraceResult:
    session = simulated_session(spec, variant, seed)
    for _ in range(spec.queries_per_session):
        run_round(session, _prompt(session.round))
    recs = session.records
    return TraceResult(
        costs=np.array([r.cost for r in recs]),
        latencies=np.array([r.latency_ms for r in recs]),
        arms=np.array([r.model_index for r in recs]),
        converged_arm=session.pinned,
    )


def _call(job):
    fn, spec, variant, seed = job
    return fn(spec, variant, seed)


def _run_jobs(fn: Callable, spec: ExperimentSpec, parallel: int) -> dict[str, list]:
    jobs = [
        (fn, spec, variant, spec.session_seed(k))
        for variant in spec.policy_grid
        for k in range(spec.num_sessions)
    ]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_call, jobs))
    else:
        results = [_call(job) for job in jobs]
    out: dict[str, list] = {v.name: [] for v in spec.policy_grid}
    for (_, _, variant, _), result in zip(jobs, results):
        out[variant.name].append(result)
    return out


def run_beta_sweep(spec: ExperimentSpec, parallel: int = 1) -> list[dict]:
    """One row per learning rate: mean rounds to convergence, mean normalized
    reward over the whole session, and mean accuracy of the queries served
    after convergence."""
    for variant in spec.policy_grid:
        if spec.session_config(variant, 0).policy_kind is not PolicyKind.SLA:
            raise InvalidSpec(f"beta sweep needs SLA variants, {variant.name!r} is not")
    per_variant = _run_jobs(run_sweep_session, spec, parallel)
    rows = []
    for variant in spec.policy_grid:
        results: list[SweepSessionResult] = per_variant[variant.name]
        n = len(results)
        rows.append(
            {
                "beta": spec.session_config(variant, 0).beta,
                "mean_convergence_rounds": math.fsum(r.convergence_rounds for r in results) / n,
                "mean_normalized_reward": math.fsum(r.mean_normalized_reward for r in results) / n,
                "mean_post_convergence_score": math.fsum(r.mean_post_convergence_score for r in results) / n,
            }
        )
    return rows


def beta_sweep_details(spec: ExperimentSpec, parallel: int = 1) -> dict[str, list[SweepSessionResult]]:
    return _run_jobs(run_sweep_session, spec, parallel)


def run_weight_study(spec: ExperimentSpec, parallel: int = 1) -> list[dict]:
    """Per-round running averages of cost and latency for every variant,
    averaged over seeds, plus the seed-averaged session totals."""
    traces = _run_jobs(run_trace_session, spec, parallel)
    rows = []
    for variant in spec.policy_grid:
        results: list[TraceResult] = traces[variant.name]
        rounds = np.arange(1, spec.queries_per_session + 1)
        running_cost = np.mean([np.cumsum(r.costs) / rounds for r in results], axis=0)
        running_latency = np.mean([np.cumsum(r.latencies) / rounds for r in results], axis=0)
        total_cost = math.fsum(math.fsum(r.costs) for r in results) / len(results)
        mean_latency = math.fsum(math.fsum(r.latencies) / len(r.latencies) for r in results) / len(results)
        for i in range(spec.queries_per_session):
            rows.append(
                {
                    "policy_variant": variant.name,
                    "round": i + 1,
                    "running_avg_cost": float(running_cost[i]),
                    "running_avg_latency_ms": float(running_latency[i]),
                    "total_cost": total_cost,
                    "mean_latency_ms": mean_latency,
                }
            )
    return rows


def weight_study_summary(rows: Sequence[dict]) -> dict[str, dict[str, float]]:
    """Collapse weight-study rows to ``{variant: {total_cost, mean_latency_ms}}``."""
    out: dict[str, dict[str, float]] = {}
    for row in rows:
        out[row["policy_variant"]] = {"total_cost": row["total_cost"], "mean_latency_ms": row["mean_latency_ms"]}
    return out


def _cell(value) -> str:
    if isinstance(value, float):
        # repr is the shortest string that round-trips; never locale-formatted.
        return repr(value)
    return str(value)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(rows: Sequence[dict], columns: Sequence[str], path: str | Path | None) -> str:
    text = rows_to_csv(rows, columns)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
