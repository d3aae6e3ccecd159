"""Shared domain types and validation.

Every type here is a frozen value object; construction validates ranges, so
an instance that exists is an instance that is valid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence


class RoutingError(Exception):
    """Base class for every error raised by this package.

    ``code`` is the machine-readable name surfaced by the gateway.
    """

    code = "RoutingError"


class InvalidConfig(RoutingError, ValueError):
    code = "InvalidConfig"


class DuplicateId(InvalidConfig):
    code = "DuplicateId"


class PoolTooSmall(InvalidConfig):
    code = "PoolTooSmall"


class NegativeCost(InvalidConfig):
    code = "NegativeCost"


class PolicyKind(str, enum.Enum):
    SLA = "SLA"
    QL = "QL"
    # Baselines routed through the same engine path.
    FIXED = "Fixed"
    UNIFORM = "Uniform"


class PostConvergence(str, enum.Enum):
    PIN = "Pin"
    CONTINUE = "ContinueLearning"


def _finite(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidConfig(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise InvalidConfig(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelDescriptor:
    id: str
    cost_per_query: float
    backend_ref: str = ""
    display_name: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise InvalidConfig("model id must be a nonempty string")
        cost = _finite(f"cost_per_query of {self.id!r}", self.cost_per_query)
        if cost < 0:
            raise NegativeCost(f"model {self.id!r} has negative cost {cost}")
        object.__setattr__(self, "cost_per_query", cost)
        if not self.backend_ref:
            object.__setattr__(self, "backend_ref", self.id)
        if not self.display_name:
            object.__setattr__(self, "display_name", self.id)


@dataclass(frozen=True)
class ModelPool:
    """Ordered pool of models; list position is the arm index."""

    models: tuple[ModelDescriptor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "models", tuple(self.models))
        validate_pool(self)

    def __len__(self) -> int:
        return len(self.models)

    def __getitem__(self, index: int) -> ModelDescriptor:
        return self.models[index]

    def __iter__(self):
        return iter(self.models)

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.models]

    @property
    def costs(self) -> list[float]:
        return [m.cost_per_query for m in self.models]

    def index_of(self, model_id: str) -> int:
        for i, m in enumerate(self.models):
            if m.id == model_id:
                return i
        raise KeyError(model_id)


def validate_pool(pool: ModelPool | Sequence[ModelDescriptor]) -> ModelPool:
    """Check pool-level invariants and return the pool.

    Accepts either a ``ModelPool`` or a bare sequence of descriptors, in which
    case a new pool is built.
    """
    models = pool.models if isinstance(pool, ModelPool) else tuple(pool)
    if len(models) < 2:
        raise PoolTooSmall(f"a pool needs at least 2 models, got {len(models)}")
    seen: set[str] = set()
    for m in models:
        if not isinstance(m, ModelDescriptor):
            raise InvalidConfig(f"pool member {m!r} is not a ModelDescriptor")
        if m.cost_per_query < 0:
            raise NegativeCost(f"model {m.id!r} has negative cost")
        if m.id in seen:
            raise DuplicateId(f"duplicate model id {m.id!r}")
        seen.add(m.id)
    if isinstance(pool, ModelPool):
        return pool
    return ModelPool(models)


@dataclass(frozen=True)
class RewardWeights:
    w_a: float = 0.5
    w_c: float = 0.25
    w_l: float = 0.25
    t_scaling: float = 3.0

    def __post_init__(self) -> None:
        for name in ("w_a", "w_c", "w_l", "t_scaling"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.w_a < 0 or self.w_c < 0:
            raise InvalidConfig("w_a and w_c must be >= 0")
        if self.w_l <= 0 or self.t_scaling <= 0:
            raise InvalidConfig("w_l and t_scaling must be > 0")


@dataclass(frozen=True)
class Observation:
    model_index: int
    accuracy: float
    cost: float
    latency_ms: float
    round: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.accuracy <= 1.0:
            raise InvalidConfig(f"accuracy must be in (0, 1], got {self.accuracy}")
        if not (math.isfinite(self.cost) and self.cost >= 0):
            raise InvalidConfig(f"cost must be finite and >= 0, got {self.cost}")
        if not (math.isfinite(self.latency_ms) and self.latency_ms > 0):
            raise InvalidConfig(f"latency_ms must be > 0, got {self.latency_ms}")
        if self.model_index < 0 or self.round < 0:
            raise InvalidConfig("model_index and round must be nonnegative")


@dataclass(frozen=True)
class SessionConfig:
    """Everything that parameterizes one routing session.

    ``beta`` drives SLA, ``theta``/``explore_epsilon``/``ql_window`` drive QL,
    ``fixed_arm`` only matters for the fixed-arm baseline. Fields that do not
    apply to the chosen policy are still range-checked.
    """

    weights: RewardWeights = field(default_factory=RewardWeights)
    policy_kind: PolicyKind = PolicyKind.SLA
    beta: float = 0.5
    theta: float = 0.7
    explore_epsilon: float = 0.1
    convergence_delta: float = 1e-4
    post_convergence: PostConvergence = PostConvergence.PIN
    rng_seed: int = 0
    ql_window: int = 20
    ql_initial_q: float = 0.5
    fixed_arm: int = 0
    normalizer: str = "Clamp01"
    latency_floor: float = 10.0
    max_retries: int = 3
    calibration_passes: int = 0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "policy_kind", PolicyKind(self.policy_kind))
            object.__setattr__(
                self, "post_convergence", PostConvergence(self.post_convergence)
            )
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None
        if not isinstance(self.weights, RewardWeights):
            raise InvalidConfig("weights must be RewardWeights")
        beta = _finite("beta", self.beta)
        theta = _finite("theta", self.theta)
        eps = _finite("explore_epsilon", self.explore_epsilon)
        delta = _finite("convergence_delta", self.convergence_delta)
        if not 0.0 < beta <= 1.0:
            raise InvalidConfig(f"beta must be in (0, 1], got {beta}")
        if not 0.0 < theta <= 1.0:
            raise InvalidConfig(f"theta must be in (0, 1], got {theta}")
        if not 0.0 <= eps < 1.0:
            raise InvalidConfig(f"explore_epsilon must be in [0, 1), got {eps}")
        if not delta > 0.0:
            raise InvalidConfig(f"convergence_delta must be > 0, got {delta}")
        if isinstance(self.rng_seed, bool) or not isinstance(self.rng_seed, int):
            raise InvalidConfig("rng_seed must be an integer")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidConfig("rng_seed must be a 64-bit unsigned integer")
        if int(self.ql_window) < 1:
            raise InvalidConfig("ql_window must be >= 1")
        if int(self.fixed_arm) < 0 or int(self.max_retries) < 1:
            raise InvalidConfig("fixed_arm must be >= 0 and max_retries >= 1")
        if int(self.calibration_passes) < 0:
            raise InvalidConfig("calibration_passes must be >= 0")
        if self.normalizer not in ("Clamp01", "RunningMinMax"):
            raise InvalidConfig(f"unknown normalizer {self.normalizer!r}")
        floor = _finite("latency_floor", self.latency_floor)
        if floor <= 0:
            raise InvalidConfig("latency_floor must be > 0")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "explore_epsilon", eps)
        object.__setattr__(self, "convergence_delta", delta)
        object.__setattr__(self, "latency_floor", floor)
        object.__setattr__(self, "ql_initial_q", _finite("ql_initial_q", self.ql_initial_q))

    def replace(self, **changes: Any) -> "SessionConfig":
        from dataclasses import replace

        return replace(self, **changes)


def session_config_from_dict(data: dict[str, Any], base: SessionConfig | None = None) -> SessionConfig:
    """Build a config from plain data (JSON/YAML), layered over ``base``."""
    base = base or SessionConfig()
    data = dict(data or {})
    known = set(SessionConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise InvalidConfig(f"unknown session config keys: {sorted(unknown)}")
    weights = data.pop("weights", None)
    if weights is not None:
        if isinstance(weights, RewardWeights):
            data["weights"] = weights
        elif isinstance(weights, dict):
            merged = {**base.weights.__dict__, **weights}
            try:
                data["weights"] = RewardWeights(**merged)
            except TypeError as exc:
                raise InvalidConfig(str(exc)) from None
        else:
            raise InvalidConfig("weights must be a mapping")
    return base.replace(**data)


def pool_from_records(records: Iterable[dict[str, Any]]) -> ModelPool:
    models = []
    for rec in records:
        try:
            models.append(
                ModelDescriptor(
                    id=rec["id"],
                    cost_per_query=rec.get("cost", rec.get("cost_per_query", 0.0)),
                    backend_ref=rec.get("backend_ref", rec["id"]),
                    display_name=rec.get("display_name", rec["id"]),
                )
            )
        except KeyError as exc:
            raise InvalidConfig(f"pool entry missing {exc}") from None
    return validate_pool(models)
