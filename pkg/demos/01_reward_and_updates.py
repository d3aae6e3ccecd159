"""
Rewards and single learning steps
=================================

A routed query yields accuracy, cost and latency. The reward trades them off,
the normalizer maps it into [0, 1], and each policy takes one step on it.
"""

import numpy as np

from llmroute import Observation, RewardNormalizer, RewardWeights, compute_raw_reward, normalize
from llmroute.policy import ql_init, ql_update, sla_init, sla_update

# balanced weights, latency measured in ms
weights = RewardWeights(w_a=0.5, w_c=0.25, w_l=0.25, t_scaling=3.0)

good = Observation(model_index=0, accuracy=0.8, cost=0.4, latency_ms=1000.0)
poor = Observation(model_index=1, accuracy=0.2, cost=0.8, latency_ms=1000.0)
print("raw reward, good answer:", compute_raw_reward(good, weights))
print("raw reward, poor answer:", compute_raw_reward(poor, weights))

# slower answers earn less, through log10 of the latency
for latency in (100.0, 1000.0, 10000.0):
    obs = Observation(0, 0.8, 0.4, latency)
    print(f"  latency {latency:>7.0f} ms -> {compute_raw_reward(obs, weights):.4f}")

# clamping vs running min/max
clamp = RewardNormalizer("Clamp01")
running = RewardNormalizer("RunningMinMax")
for raw in (-0.4, 1.2, 0.4):
    clamped, clamp = normalize(raw, clamp)
    scaled, running = normalize(raw, running)
    print(f"raw {raw:+.1f}: clamp -> {clamped.normalized:.3f}, running min/max -> {scaled.normalized:.3f}")

# one reward-inaction step: the chosen arm gains, the rest shrink in proportion
state = sla_init(4, beta=0.5)
state = sla_update(state, chosen=0, reward=0.5)
print("P after one step:", state.probs)

# zero reward moves nothing
print("P after a zero reward:", sla_update(state, chosen=2, reward=0.0).probs)

# one Q-learning step: Q moves a fraction theta toward the reward
q = ql_update(ql_init(4, theta=0.7, explore_epsilon=0.1), chosen=2, reward=0.9)
print("Q after one step:", q.qvalues)
assert np.isclose(q.qvalues[2], 0.78)
