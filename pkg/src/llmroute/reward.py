"""Weighted accuracy/cost/latency reward and its normalization into [0, 1]."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .core import Observation, RewardWeights, RoutingError

DEFAULT_LATENCY_FLOOR_MS = 10.0


class DegenerateLatency(RoutingError, ValueError):
    code = "DegenerateLatency"


def compute_raw_reward(
    obs: Observation,
    weights: RewardWeights,
    latency_floor: float = DEFAULT_LATENCY_FLOOR_MS,
) -> float:
    """Reward for one routed query.

    ``(w_a * accuracy - w_c * cost) * t_scaling / (w_l * log10(latency))``,
    with latency floored at ``latency_floor`` milliseconds first. The result
    is unbounded and negative whenever cost outweighs accuracy.
    """
    latency = max(obs.latency_ms, latency_floor)
    log_latency = math.log10(latency)
    if log_latency <= 0.0:
        raise DegenerateLatency(
            f"log10 of floored latency {latency} ms is {log_latency}; "
            "latency is probably not in milliseconds"
        )
    numerator = weights.w_a * obs.accuracy - weights.w_c * obs.cost
    return numerator * weights.t_scaling / (weights.w_l * log_latency)


class NormalizerMode(str, enum.Enum):
    CLAMP01 = "Clamp01"
    RUNNING_MIN_MAX = "RunningMinMax"


@dataclass(frozen=True)
class RewardValue:
    raw: float
    normalized: float


@dataclass(frozen=True)
class RewardNormalizer:
    """Maps raw rewards into [0, 1].

    ``RunningMinMax`` rescales against the extremes seen so far in the
    session; bounds start as ``None`` unless a prior range is supplied.
    """

    mode: NormalizerMode = NormalizerMode.CLAMP01
    running_min: float | None = None
    running_max: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", NormalizerMode(self.mode))
        lo, hi = self.running_min, self.running_max
        if (lo is None) != (hi is None):
            raise ValueError("running_min and running_max must be set together")
        if lo is not None and lo > hi:
            raise ValueError("running_min must be <= running_max")


def normalize(raw: float, normalizer: RewardNormalizer) -> tuple[RewardValue, RewardNormalizer]:
    """Return the normalized reward and the (possibly updated) normalizer."""
    if not math.isfinite(raw):
        raise ValueError(f"raw reward must be finite, got {raw}")
    if normalizer.mode is NormalizerMode.CLAMP01:
        return RewardValue(raw, max(0.0, min(1.0, raw))), normalizer

    lo = raw if normalizer.running_min is None else min(normalizer.running_min, raw)
    hi = raw if normalizer.running_max is None else max(normalizer.running_max, raw)
    updated = replace(normalizer, running_min=lo, running_max=hi)
    if hi == lo:
        return RewardValue(raw, 0.5), updated
    value = (raw - lo) / (hi - lo)
    # Guard against the last ulp of rounding.
    return RewardValue(raw, max(0.0, min(1.0, value))), updated
