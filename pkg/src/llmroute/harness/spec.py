"""Experiment specifications and the default simulated pool."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..core import InvalidConfig, PolicyKind, RewardWeights, SessionConfig, session_config_from_dict


class InvalidSpec(InvalidConfig):
    code = "InvalidSpec"


# Costs are the normalized per-query cost vector of the reference setup;
# latencies and qualities are synthetic, chosen so the cheap models are also
# fast and weaker and the expensive ones slow and stronger.
DEFAULT_POOL: list[dict[str, Any]] = [
    {"id": "model-a", "cost": 0.4, "base_latency_ms": 800.0, "mean_quality": 0.75},
    {"id": "model-b", "cost": 0.8, "base_latency_ms": 3000.0, "mean_quality": 0.85},
    {"id": "model-c", "cost": 0.7, "base_latency_ms": 2500.0, "mean_quality": 0.82},
    {"id": "model-d", "cost": 0.3, "base_latency_ms": 600.0, "mean_quality": 0.65},
]
DEFAULT_LATENCY_JITTER = 0.2
DEFAULT_QUALITY_JITTER = 0.05

COST_WEIGHTS = RewardWeights(w_a=0.2, w_c=0.6, w_l=0.2)
LATENCY_WEIGHTS = RewardWeights(w_a=0.2, w_c=0.2, w_l=0.6)
BALANCED_WEIGHTS = RewardWeights(w_a=0.5, w_c=0.25, w_l=0.25)

DEFAULT_BETA_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)

# Sentinel accepted as ``fixed_arm`` in a policy grid entry.
MOST_EXPENSIVE = "most_expensive"


def default_pool_specs(
    latency_jitter: float = DEFAULT_LATENCY_JITTER,
    quality_jitter: float = DEFAULT_QUALITY_JITTER,
) -> list[dict[str, Any]]:
    return [
        {**entry, "latency_jitter": latency_jitter, "quality_jitter": quality_jitter}
        for entry in DEFAULT_POOL
    ]


@dataclass(frozen=True)
class PolicyVariant:
    name: str
    overrides: dict[str, Any]


@dataclass
class ExperimentSpec:
    name: str
    pool_specs: list[dict[str, Any]]
    weights: RewardWeights
    policy_grid: list[PolicyVariant]
    num_sessions: int = 10
    queries_per_session: int = 500
    seeds: list[int] = field(default_factory=lambda: [0])
    session: dict[str, Any] = field(default_factory=dict)
    post_convergence_queries: int = 200
    dataset: str | None = None
    dataset_format: str = "jsonl"
    judge: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.num_sessions < 1 or self.queries_per_session < 1:
            raise InvalidSpec("num_sessions and queries_per_session must be >= 1")
        if len(self.seeds) not in (1, self.num_sessions):
            raise InvalidSpec(
                f"need 1 seed or exactly num_sessions={self.num_sessions} seeds, got {len(self.seeds)}"
            )
        for s in self.seeds:
            if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2**64:
                raise InvalidSpec(f"seed {s!r} is not a 64-bit unsigned integer")
        if not self.policy_grid:
            raise InvalidSpec("policy_grid is empty")
        if len({v.name for v in self.policy_grid}) != len(self.policy_grid):
            raise InvalidSpec("policy_grid variant names must be unique")
        if self.post_convergence_queries < 0:
            raise InvalidSpec("post_convergence_queries must be >= 0")
        # Fail early on bad variants rather than inside a worker process.
        for variant in self.policy_grid:
            self.session_config(variant, self.session_seed(0))

    def session_seed(self, k: int) -> int:
        if len(self.seeds) == self.num_sessions:
            return self.seeds[k]
        return (self.seeds[0] + k) % 2**64

    def session_config(self, variant: PolicyVariant, seed: int) -> SessionConfig:
        overrides = {**self.session, **variant.overrides}
        if overrides.get("fixed_arm") == MOST_EXPENSIVE:
            costs = [float(e.get("cost", e.get("cost_per_query", 0.0))) for e in self.pool_specs]
            overrides["fixed_arm"] = max(range(len(costs)), key=lambda i: (costs[i], -i))
        overrides["rng_seed"] = seed
        try:
            base = SessionConfig(weights=self.weights)
            return session_config_from_dict(overrides, base)
        except (InvalidConfig, TypeError) as exc:
            raise InvalidSpec(f"variant {variant.name!r}: {exc}") from None

    def with_seed(self, seed: int) -> "ExperimentSpec":
        from dataclasses import replace

        return replace(self, seeds=[seed])


def _variants(raw: Any) -> list[PolicyVariant]:
    if not isinstance(raw, list):
        raise InvalidSpec("policy_grid must be a list")
    variants = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise InvalidSpec(f"policy_grid[{i}] must be a mapping")
        entry = dict(entry)
        name = str(entry.pop("name", f"variant-{i}"))
        variants.append(PolicyVariant(name, entry))
    return variants


def beta_grid_variants(betas) -> list[PolicyVariant]:
    return [PolicyVariant(f"SLA beta={b:g}", {"policy_kind": "SLA", "beta": float(b)}) for b in betas]


def weight_study_variants() -> list[PolicyVariant]:
    return [
        PolicyVariant("SLA", {"policy_kind": "SLA"}),
        PolicyVariant("QL", {"policy_kind": "QL", "explore_epsilon": 0.1}),
        PolicyVariant("most-expensive", {"policy_kind": PolicyKind.FIXED.value, "fixed_arm": MOST_EXPENSIVE}),
        PolicyVariant("random", {"policy_kind": PolicyKind.UNIFORM.value}),
    ]


def spec_from_dict(data: dict[str, Any]) -> ExperimentSpec:
    """Build a spec from plain data; keys mirror the ``ExperimentSpec`` fields.

    ``betas`` is accepted as shorthand for an SLA-only ``policy_grid``.
    """
    data = dict(data)
    known = set(ExperimentSpec.__dataclass_fields__) | {"betas"}
    unknown = set(data) - known
    if unknown:
        raise InvalidSpec(f"unknown spec keys: {sorted(unknown)}")
    if "betas" in data:
        if "policy_grid" in data:
            raise InvalidSpec("give either betas or policy_grid, not both")
        data["policy_grid"] = beta_grid_variants(data.pop("betas"))
    elif "policy_grid" in data:
        data["policy_grid"] = _variants(data["policy_grid"])
    else:
        raise InvalidSpec("spec needs a policy_grid (or betas)")
    weights = data.get("weights", {})
    if isinstance(weights, dict):
        try:
            data["weights"] = RewardWeights(**weights)
        except (TypeError, InvalidConfig) as exc:
            raise InvalidSpec(f"weights: {exc}") from None
    if "pool_specs" not in data:
        data["pool_specs"] = default_pool_specs()
    if "seeds" in data and not isinstance(data["seeds"], list):
        data["seeds"] = [data["seeds"]]
    data.setdefault("name", "experiment")
    try:
        return ExperimentSpec(**data)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from None


def default_beta_sweep_spec(
    betas=DEFAULT_BETA_GRID, num_sessions: int = 10, seed: int = 0
) -> ExperimentSpec:
    return ExperimentSpec(
        name="beta-sweep",
        pool_specs=default_pool_specs(),
        weights=BALANCED_WEIGHTS,
        policy_grid=beta_grid_variants(betas),
        num_sessions=num_sessions,
        queries_per_session=500,
        seeds=[seed],
    )


def default_weight_study_spec(
    weights: RewardWeights, num_sessions: int = 10, seed: int = 0, normalizer: str = "RunningMinMax"
) -> ExperimentSpec:
    return ExperimentSpec(
        name="weight-study",
        pool_specs=default_pool_specs(),
        weights=weights,
        policy_grid=weight_study_variants(),
        num_sessions=num_sessions,
        queries_per_session=500,
        seeds=[seed],
        # One round-robin pass lets the running min/max see every arm before
        # the first policy step; without it a lucky early arm can be
        # reinforced as if it were the best.
        session={"normalizer": normalizer, "calibration_passes": 1 if normalizer == "RunningMinMax" else 0},
    )
