"""Sessions against live chat-completion backends, scored by a judge model."""

from __future__ import annotations

import logging

from ..backends import BackendRegistry, register_http_backend
from ..config import build_pool, is_simulated
from ..engine import RoundFailed, Session, run_round
from ..scoring import LlmJudgeScorer, OracleScorer
from .dataset import DatasetEntry, ingest_dataset
from .spec import ExperimentSpec, InvalidSpec

log = logging.getLogger(__name__)

LIVE_RUN_COLUMNS = (
    "policy_variant",
    "seed",
    "round",
    "model_id",
    "raw_reward",
    "normalized_reward",
    "accuracy",
    "cost",
    "latency_ms",
    "cumulative_cost",
    "pinned",
)

JUDGE_REF = "__judge__"


def _scorer(spec: ExperimentSpec, registry: BackendRegistry):
    if spec.judge:
        judge = spec.judge
        if "url" not in judge:
            raise InvalidSpec("judge needs a url")
        register_http_backend(
            registry,
            JUDGE_REF,
            judge["url"],
            judge.get("model", "judge"),
            token_env=judge.get("token_env"),
            timeout_s=float(judge.get("timeout_s", 60.0)),
        )
        return LlmJudgeScorer(registry, JUDGE_REF)
    if is_simulated(spec.pool_specs):
        return OracleScorer()
    raise InvalidSpec("live backends need a judge to score responses")


def run_live(spec: ExperimentSpec, entries: list[DatasetEntry] | None = None) -> list[dict]:
    """Run every (variant, session) over consecutive dataset questions.

    Session ``k`` reads questions ``k*q .. k*q+q-1`` (wrapping around) where
    ``q`` is ``queries_per_session``. Failed rounds are logged and skipped.
    """
    if entries is None:
        if not spec.dataset:
            raise InvalidSpec("live-run needs a dataset")
        entries = ingest_dataset(spec.dataset, spec.dataset_format)
    if not entries:
        raise InvalidSpec("dataset is empty")

    rows = []
    for variant in spec.policy_grid:
        for k in range(spec.num_sessions):
            seed = spec.session_seed(k)
            config = spec.session_config(variant, seed)
            pool, registry = build_pool(spec.pool_specs, latency_floor=config.latency_floor)
            session = Session(config=config, pool=pool, registry=registry, scorer=_scorer(spec, registry))
            for i in range(spec.queries_per_session):
                entry = entries[(k * spec.queries_per_session + i) % len(entries)]
                try:
                    _, rec = run_round(session, entry.question, entry.human_answer)
                except RoundFailed as exc:
                    log.error("%s seed %d: %s", variant.name, seed, exc)
                    continue
                rows.append(
                    {
                        "policy_variant": variant.name,
                        "seed": seed,
                        "round": rec.round,
                        "model_id": rec.model_id,
                        "raw_reward": rec.raw_reward,
                        "normalized_reward": rec.normalized_reward,
                        "accuracy": rec.accuracy,
                        "cost": rec.cost,
                        "latency_ms": rec.latency_ms,
                        "cumulative_cost": rec.cumulative_cost,
                        "pinned": int(rec.pinned),
                    }
                )
    return rows
