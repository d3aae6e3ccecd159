"""Session-level LLM routing with learning-automaton and Q-learning policies."""

from .core import (
    InvalidConfig,
    ModelDescriptor,
    ModelPool,
    Observation,
    PolicyKind,
    PostConvergence,
    RewardWeights,
    RoutingError,
    SessionConfig,
    validate_pool,
)
from .engine import RoundFailed, Session, SessionRecord, run_round, session_metrics
from .reward import RewardNormalizer, RewardValue, compute_raw_reward, normalize

__version__ = "0.1.0"

__all__ = [
    "InvalidConfig",
    "ModelDescriptor",
    "ModelPool",
    "Observation",
    "PolicyKind",
    "PostConvergence",
    "RewardNormalizer",
    "RewardValue",
    "RewardWeights",
    "RoundFailed",
    "RoutingError",
    "Session",
    "SessionConfig",
    "SessionRecord",
    "compute_raw_reward",
    "normalize",
    "run_round",
    "session_metrics",
    "validate_pool",
]
