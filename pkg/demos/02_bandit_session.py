"""
A routing session on four simulated models
==========================================

Each simulated model answers with a fixed quality, so the best model is known.
We watch SLA and Q-learning pick it out, then pin it for the rest of the
session.
"""

from llmroute import ModelDescriptor, ModelPool, PolicyKind, RewardWeights, SessionConfig
from llmroute.backends import BackendRegistry, SimulatedBackend, SimulatedBackendSpec
from llmroute.engine import Session, run_round, session_metrics
from llmroute.scoring import OracleScorer

qualities = [0.9, 0.5, 0.4, 0.2]

registry = BackendRegistry()
models = []
for i, q in enumerate(qualities):
    name = f"model-{i}"
    registry.register(name, SimulatedBackend(name, SimulatedBackendSpec(base_latency_ms=1000.0, mean_quality=q)))
    models.append(ModelDescriptor(name, cost_per_query=0.1))
pool = ModelPool(models)

# w_a=1, w_c=0, w_l=1 at 1000 ms makes the reward equal the quality
weights = RewardWeights(w_a=1.0, w_c=0.0, w_l=1.0)

for kind, extra in [(PolicyKind.SLA, {"beta": 0.1}), (PolicyKind.QL, {"theta": 0.7, "explore_epsilon": 0.1})]:
    config = SessionConfig(weights=weights, policy_kind=kind, rng_seed=1, **extra)
    session = Session(config=config, pool=pool, registry=registry, scorer=OracleScorer())
    for i in range(300):
        answer, record = run_round(session, f"question {i}")
        if i < 3 or i % 50 == 0:
            snap = ", ".join(f"{x:.3f}" for x in record.policy_snapshot)
            print(f"{kind.value:>3} round {record.round:3d}: {record.model_id}  [{snap}]")
    m = session_metrics(session)
    print(f"{kind.value:>3}: pinned {m.converged_model_id} after {m.rounds_to_convergence} rounds, "
          f"mean accuracy {m.mean_accuracy:.3f}\n")

# A high learning rate commits early and sometimes to the wrong model.
wrong = 0
for seed in range(100):
    session = Session(config=SessionConfig(weights=weights, beta=0.5, rng_seed=seed),
                      pool=pool, registry=registry, scorer=OracleScorer())
    while session.pinned is None:
        run_round(session, "q")
    wrong += session.pinned != 0
print(f"SLA beta=0.5 pinned a worse model in {wrong} of 100 sessions")
