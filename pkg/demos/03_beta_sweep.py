"""
Learning rate vs convergence speed
==================================

Sweep the SLA learning rate on the default simulated pool and report how fast
sessions converge and how good the answers are afterwards.
"""

from llmroute.harness.experiments import BETA_SWEEP_COLUMNS, beta_sweep_details, rows_to_csv, run_beta_sweep
from llmroute.harness.spec import DEFAULT_POOL, default_beta_sweep_spec

for entry in DEFAULT_POOL:
    print(entry)

spec = default_beta_sweep_spec(betas=(0.1, 0.3, 0.5, 0.7, 0.9), num_sessions=10, seed=0)
rows = run_beta_sweep(spec)
print()
print(f"{'beta':>5} {'rounds':>8} {'reward':>8} {'post score':>11}")
for r in rows:
    print(f"{r['beta']:>5} {r['mean_convergence_rounds']:>8.1f} {r['mean_normalized_reward']:>8.3f} "
          f"{r['mean_post_convergence_score']:>11.3f}")

first, last = rows[0]["mean_convergence_rounds"], rows[-1]["mean_convergence_rounds"]
print(f"\nconvergence is {1 - last / first:.0%} faster at beta=0.9 than at beta=0.1")

# which model each session settled on
for name, results in beta_sweep_details(spec).items():
    print(name, [r.converged_arm for r in results])

# the same rows as CSV
print()
print(rows_to_csv(rows, BETA_SWEEP_COLUMNS))
