"""
Routing over HTTP
=================

The gateway keeps one routing session per client conversation. Here it is
driven in-process; ``python -m llmroute.gateway --config gateway.yaml`` serves
the same app with uvicorn.
"""

from fastapi.testclient import TestClient

from llmroute.gateway import create_app, gateway_config_from_dict

config = gateway_config_from_dict({
    "pool": [
        {"id": "fast-small", "cost": 0.1, "base_latency_ms": 400.0, "mean_quality": 0.6},
        {"id": "slow-large", "cost": 0.9, "base_latency_ms": 3000.0, "mean_quality": 0.9},
        {"id": "middle", "cost": 0.4, "base_latency_ms": 1200.0, "mean_quality": 0.8},
        {"id": "weak", "cost": 0.1, "base_latency_ms": 500.0, "mean_quality": 0.3},
    ],
    "session": {"policy_kind": "SLA", "beta": 0.3, "weights": {"w_a": 0.6, "w_c": 0.2, "w_l": 0.2}},
    "scorer": "oracle",
    "session_ttl_s": 600,
})
client = TestClient(create_app(config))

sid = client.post("/v1/sessions", json={}).json()["session_id"]
print("session", sid)
print("initial state:", client.get(f"/v1/sessions/{sid}").json()["policy_snapshot"])

for i in range(120):
    reply = client.post(f"/v1/sessions/{sid}/query", json={"prompt": f"question {i}"}).json()
    if i < 5 or reply["converged"] and i % 20 == 0:
        print(f"round {reply['round']:3d} -> {reply['model_id']:<10} score {reply['score']:.3f} "
              f"converged={reply['converged']}")

state = client.get(f"/v1/sessions/{sid}").json()
print("pinned:", state["pinned_model"])
print("metrics:", state["metrics"])

# a Q-learning session alongside it
ql = client.post("/v1/sessions", json={"policy_kind": "QL", "explore_epsilon": 0.1}).json()["session_id"]
client.post(f"/v1/sessions/{ql}/query", json={"prompt": "hello"})
print("QL snapshot:", client.get(f"/v1/sessions/{ql}").json()["policy_snapshot"])

# errors carry a machine-readable code
print(client.post("/v1/sessions", json={"explore_epsilon": 1.5}).json())
client.delete(f"/v1/sessions/{sid}")
print(client.get(f"/v1/sessions/{sid}").status_code, "after delete")
