"""Per-session routing loop.

One round is: select an arm (or use the pinned one), execute the query on
that arm's backend, score the answer, turn the observation into a reward,
update the policy, and test for convergence. ``run_round`` is atomic: it
either commits one record plus one policy update, or leaves the learning
state exactly as it was.
"""

from __future__ import annotations

import logging
import math
import uuid
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .backends import BackendError, BackendRegistry, QueryRequest
from .core import (
    ModelPool,
    Observation,
    PolicyKind,
    PostConvergence,
    RoutingError,
    SessionConfig,
)
from .policy import (
    FixedArmState,
    PolicyState,
    QlState,
    SlaState,
    UniformState,
    ql_init,
    sla_init,
)
from .reward import NormalizerMode, RewardNormalizer, compute_raw_reward, normalize
from .scoring import ScoreRequest, Scorer, ScoringError

log = logging.getLogger(__name__)


class RoundFailed(RoutingError):
    code = "RoundFailed"


class EmptySession(RoutingError, ValueError):
    code = "EmptySession"


@dataclass(frozen=True)
class SessionRecord:
    round: int
    model_index: int
    raw_reward: float
    normalized_reward: float
    accuracy: float
    cost: float
    latency_ms: float
    cumulative_cost: float
    policy_snapshot: tuple[float, ...]
    model_id: str = ""
    pinned: bool = False


def init_policy(config: SessionConfig, pool_size: int) -> PolicyState:
    kind = config.policy_kind
    if kind is PolicyKind.SLA:
        return sla_init(pool_size, config.beta)
    if kind is PolicyKind.QL:
        return ql_init(
            pool_size,
            config.theta,
            config.explore_epsilon,
            initial_q=config.ql_initial_q,
            history_limit=max(64, config.ql_window),
        )
    if kind is PolicyKind.FIXED:
        return FixedArmState(pool_size, config.fixed_arm)
    return UniformState(pool_size)


@dataclass
class Session:
    """Mutable single-owner session. Mutate only through ``run_round``."""

    config: SessionConfig
    pool: ModelPool
    registry: BackendRegistry
    scorer: Scorer
    id: str = field(default_factory=lambda: uuid.uuid4().hex)
    policy_state: PolicyState | None = None
    normalizer: RewardNormalizer | None = None
    rng: np.random.Generator | None = None
    records: list[SessionRecord] = field(default_factory=list)
    pinned: int | None = None
    pinned_at_round: int | None = None
    failed_rounds: int = 0

    def __post_init__(self) -> None:
        if self.policy_state is None:
            self.policy_state = init_policy(self.config, len(self.pool))
        if self.normalizer is None:
            self.normalizer = RewardNormalizer(NormalizerMode(self.config.normalizer))
        if self.rng is None:
            self.rng = np.random.default_rng(self.config.rng_seed)
        for model in self.pool:
            if model.backend_ref not in self.registry:
                raise RoutingError(f"model {model.id!r} has no registered backend {model.backend_ref!r}")

    @property
    def round(self) -> int:
        return len(self.records) + self.failed_rounds

    @property
    def calibrating(self) -> bool:
        """True while the round-robin calibration passes are still running.

        Calibration rounds are served and recorded normally but only feed the
        reward normalizer, so a running min/max has seen every arm before the
        policy takes its first step. Baselines do not learn and skip it.
        """
        if self.config.policy_kind not in (PolicyKind.SLA, PolicyKind.QL):
            return False
        return len(self.records) < self.config.calibration_passes * len(self.pool)

    @property
    def converged(self) -> bool:
        return self.pinned is not None

    def policy_snapshot(self) -> list[float]:
        return self.policy_state.snapshot()


def create_session(
    config: SessionConfig,
    pool: ModelPool,
    registry: BackendRegistry,
    scorer: Scorer,
    session_id: str | None = None,
) -> Session:
    session = Session(config=config, pool=pool, registry=registry, scorer=scorer)
    if session_id is not None:
        session.id = session_id
    return session


def _check_converged(state: PolicyState, config: SessionConfig) -> int | None:
    if isinstance(state, QlState):
        return state.converged(config.convergence_delta, config.ql_window)
    return state.converged(config.convergence_delta)


def run_round(
    session: Session,
    prompt: str,
    human_response: str | None = None,
) -> tuple[str, SessionRecord]:
    """Route one query through the session and commit the result.

    Returns the answer text and the record appended. Backend or scorer
    failures are retried on a fresh selection up to ``max_retries``
    attempts; after that ``RoundFailed`` is raised and only the failure
    counter moves.
    """
    config = session.config
    round_index = session.round
    rng_state = session.rng.bit_generator.state
    state = session.policy_state
    errors: list[str] = []

    calibrating = session.calibrating
    for attempt in range(config.max_retries):
        if session.pinned is not None:
            arm = session.pinned
        elif calibrating:
            arm = len(session.records) % len(session.pool)
        else:
            arm = state.select(session.rng)
        model = session.pool[arm]
        request = QueryRequest(session_id=session.id, prompt=prompt, round=round_index)
        try:
            response = session.registry.execute(model.backend_ref, request, session.rng)
            score = session.scorer.score(
                ScoreRequest(question=prompt, ai_response=response.text or " ", human_response=human_response),
                response,
            )
        except (BackendError, ScoringError) as exc:
            log.warning("session %s round %d attempt %d on %s failed: %s",
                        session.id, round_index, attempt + 1, model.id, exc)
            errors.append(f"{model.id}: {exc.code}: {exc}")
            continue
        break
    else:
        session.rng.bit_generator.state = rng_state
        session.failed_rounds += 1
        raise RoundFailed(f"round {round_index} failed after {config.max_retries} attempts: " + "; ".join(errors))

    obs = Observation(
        model_index=arm,
        accuracy=score.value,
        cost=model.cost_per_query,
        latency_ms=response.latency_ms,
        round=round_index,
    )
    raw = compute_raw_reward(obs, config.weights, config.latency_floor)
    value, normalizer = normalize(raw, session.normalizer)

    pinned, pinned_at = session.pinned, session.pinned_at_round
    if calibrating:
        new_state = state
    elif pinned is None:
        new_state = state.update(arm, value.normalized)
        # An inaction step (zero reward) moves nothing, so it says nothing
        # about whether learning has settled.
        if value.normalized > 0.0 or not isinstance(new_state, SlaState):
            target = _check_converged(new_state, config)
            if target is not None:
                new_state = replace(new_state, converged_to=target)
                if config.post_convergence is PostConvergence.PIN:
                    pinned, pinned_at = target, round_index
    else:
        new_state = state

    previous_cost = session.records[-1].cumulative_cost if session.records else 0.0
    record = SessionRecord(
        round=round_index,
        model_index=arm,
        raw_reward=raw,
        normalized_reward=value.normalized,
        accuracy=obs.accuracy,
        cost=obs.cost,
        latency_ms=obs.latency_ms,
        cumulative_cost=previous_cost + obs.cost,
        policy_snapshot=tuple(new_state.snapshot()),
        model_id=model.id,
        pinned=session.pinned is not None,
    )

    # Commit.
    session.policy_state = new_state
    session.normalizer = normalizer
    session.pinned, session.pinned_at_round = pinned, pinned_at
    session.records.append(record)
    return response.text, record


@dataclass(frozen=True)
class SessionMetrics:
    rounds: int
    total_cost: float
    mean_latency_ms: float
    mean_accuracy: float
    mean_normalized_reward: float
    rounds_to_convergence: int | None
    converged_arm: int | None
    converged_model_id: str | None

    def as_dict(self) -> dict[str, Any]:
        out = dict(self.__dict__)
        if out["rounds_to_convergence"] is None:
            out["rounds_to_convergence"] = "not converged"
        return out


def session_metrics(session: Session) -> SessionMetrics:
    """Totals and means over every record, pre- and post-convergence.

    ``rounds_to_convergence`` counts the rounds played up to and including
    the one whose update triggered the pin, so every record from that count
    onward (0-based ``round``) is a pinned record.
    """
    records = session.records
    if not records:
        raise EmptySession(f"session {session.id} has no records")
    n = len(records)
    # math.fsum keeps totals independent of summation order.
    return SessionMetrics(
        rounds=n,
        total_cost=math.fsum(r.cost for r in records),
        mean_latency_ms=math.fsum(r.latency_ms for r in records) / n,
        mean_accuracy=math.fsum(r.accuracy for r in records) / n,
        mean_normalized_reward=math.fsum(r.normalized_reward for r in records) / n,
        rounds_to_convergence=None if session.pinned_at_round is None else session.pinned_at_round + 1,
        converged_arm=session.pinned,
        converged_model_id=None if session.pinned is None else session.pool[session.pinned].id,
    )
