"""
Cost-weighted and latency-weighted routing
==========================================

Weight the reward toward cost, then toward latency, and compare the learning
policies with two baselines: always the most expensive model, and a uniformly
random one.
"""

import numpy as np

from llmroute.harness.experiments import run_weight_study, weight_study_summary
from llmroute.harness.spec import COST_WEIGHTS, LATENCY_WEIGHTS, default_weight_study_spec

for label, weights in [("cost", COST_WEIGHTS), ("latency", LATENCY_WEIGHTS)]:
    spec = default_weight_study_spec(weights, num_sessions=10, seed=0)
    rows = run_weight_study(spec)
    summary = weight_study_summary(rows)
    print(f"{label} weights {weights}")
    for name, s in summary.items():
        print(f"  {name:>15}: total cost {s['total_cost']:7.1f}   mean latency {s['mean_latency_ms']:7.0f} ms")

    # running average cost per query of the SLA sessions at a few rounds
    sla = [r for r in rows if r["policy_variant"] == "SLA"]
    marks = [0, 9, 49, 199, 499]
    print("  SLA running cost/query:", np.round([sla[i]["running_avg_cost"] for i in marks], 3))
    print()

cost = weight_study_summary(run_weight_study(default_weight_study_spec(COST_WEIGHTS)))
print(f"SLA session cost is {1 - cost['SLA']['total_cost'] / cost['most-expensive']['total_cost']:.0%} "
      "below always using the most expensive model")
