import threading

import pytest
from fastapi.testclient import TestClient

from conftest import StubServer
from llmroute.backends import BackendRegistry, FlakyBackend, SimulatedBackend, SimulatedBackendSpec
from llmroute.core import InvalidConfig
from llmroute.gateway import Gateway, GatewayConfig, create_app, gateway_config_from_dict

POOL = [
    {"id": f"m{i}", "cost": c, "base_latency_ms": 1000.0, "mean_quality": q}
    for i, (c, q) in enumerate(zip((0.1, 0.1, 0.1, 0.1), (0.95, 0.1, 0.1, 0.1)))
]
IDENTITY = {"w_a": 1.0, "w_c": 0.0, "w_l": 1.0}


class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now


def make_client(pool=POOL, registry=None, clock=None, **cfg):
    data = {"pool": pool, "session": {"weights": IDENTITY}, **cfg}
    config = gateway_config_from_dict(data)
    app = create_app(config, registry, clock or FakeClock())
    return TestClient(app)


def new_session(client, body=None):
    resp = client.post("/v1/sessions", json=body) if body is not None else client.post("/v1/sessions")
    assert resp.status_code == 201, resp.text
    return resp.json()["session_id"]


def error_code(resp):
    return resp.json()["error"]["code"]


class TestCreate:
    def test_empty_body_uses_defaults(self):
        client = make_client()
        sid = new_session(client)
        state = client.get(f"/v1/sessions/{sid}").json()
        assert state["policy_kind"] == "SLA"
        assert state["policy_snapshot"] == {"P": [0.25, 0.25, 0.25, 0.25]}
        assert state["round"] == 0 and state["converged"] is False and state["metrics"] is None

    def test_ql_override(self):
        client = make_client()
        sid = new_session(client, {"policy_kind": "QL", "explore_epsilon": 0.1})
        state = client.get(f"/v1/sessions/{sid}").json()
        assert state["policy_kind"] == "QL"
        assert state["policy_snapshot"] == {"Q": [0.5, 0.5, 0.5, 0.5]}

    @pytest.mark.parametrize("body", [{"explore_epsilon": 1.5}, {"beta": 0}, {"no_such_field": 1}, [1, 2]])
    def test_invalid_overrides(self, body):
        resp = make_client().post("/v1/sessions", json=body)
        assert resp.status_code == 400 and error_code(resp) == "InvalidConfig"

    def test_oracle_with_live_pool_rejected(self):
        pool = [{"id": "a", "cost": 0.1, "url": "http://127.0.0.1:9/v1"},
                {"id": "b", "cost": 0.2, "url": "http://127.0.0.1:9/v1"}]
        resp = make_client(pool).post("/v1/sessions")
        assert resp.status_code == 400 and "llm_judge" in resp.json()["error"]["message"]


class TestQuery:
    def test_first_query(self):
        client = make_client()
        sid = new_session(client)
        resp = client.post(f"/v1/sessions/{sid}/query", json={"prompt": "hello"})
        body = resp.json()
        assert resp.status_code == 200
        assert body["model_id"] in {"m0", "m1", "m2", "m3"}
        assert body["converged"] is False and body["pinned_model"] is None
        assert body["round"] == 0 and body["latency_ms"] == 1000.0
        assert set(body) == {"answer", "model_id", "latency_ms", "score", "round", "converged", "pinned_model"}

    def test_pinned_session(self):
        client = make_client()
        sid = new_session(client)
        for _ in range(200):
            body = client.post(f"/v1/sessions/{sid}/query", json={"prompt": "q"}).json()
            if body["converged"]:
                break
        assert body["converged"]
        for _ in range(5):
            body = client.post(f"/v1/sessions/{sid}/query", json={"prompt": "q"}).json()
            assert body["model_id"] == body["pinned_model"] and body["converged"] is True

    def test_state_simplex_and_metrics(self):
        client = make_client()
        sid = new_session(client)
        for i in range(30):
            client.post(f"/v1/sessions/{sid}/query", json={"prompt": f"q{i}"})
            state = client.get(f"/v1/sessions/{sid}").json()
            assert abs(sum(state["policy_snapshot"]["P"]) - 1.0) <= 1e-9
        assert state["round"] == 30
        assert state["metrics"]["rounds"] == 30
        assert state["metrics"]["total_cost"] == pytest.approx(3.0)

    def test_state_read_is_pure(self):
        client = make_client()
        sid = new_session(client)
        client.post(f"/v1/sessions/{sid}/query", json={"prompt": "q"})
        assert client.get(f"/v1/sessions/{sid}").json() == client.get(f"/v1/sessions/{sid}").json()

    def test_missing_prompt(self):
        client = make_client()
        sid = new_session(client)
        resp = client.post(f"/v1/sessions/{sid}/query", json={})
        assert resp.status_code == 400 and error_code(resp) == "InvalidConfig"

    def test_round_failed_is_502(self):
        registry = BackendRegistry()
        for name in ("x", "y"):
            sim = SimulatedBackend(name, SimulatedBackendSpec(100.0, 0.5))
            registry.register(name, FlakyBackend(sim, failures=10))
        client = make_client([{"id": "x", "cost": 0.1}, {"id": "y", "cost": 0.1}], registry=registry)
        sid = new_session(client)
        resp = client.post(f"/v1/sessions/{sid}/query", json={"prompt": "q"})
        assert resp.status_code == 502 and error_code(resp) == "RoundFailed"
        assert "injected failure" in resp.json()["error"]["message"]
        assert client.get(f"/v1/sessions/{sid}").json()["round"] == 1

    def test_judge_scored_live_pool(self):
        with StubServer(replies={"judge": "0.75"}) as server:
            pool = [{"id": "a", "cost": 0.1, "url": server.url, "model": "a"},
                    {"id": "b", "cost": 0.2, "url": server.url, "model": "b"}]
            client = make_client(pool, scorer={"kind": "llm_judge", "judge": {"url": server.url, "model": "judge"}})
            sid = new_session(client)
            body = client.post(
                f"/v1/sessions/{sid}/query", json={"prompt": "capital of France?", "human_response": "Paris"}
            ).json()
            judge_prompt = server.requests[-1]["body"]["messages"][0]["content"]
        assert body["score"] == 0.75
        assert body["answer"] == f"answer from {body['model_id']}"
        assert "capital of France?" in judge_prompt and "Paris" in judge_prompt


class TestLifecycle:
    @pytest.mark.parametrize("method,path", [
        ("get", "/v1/sessions/nope"),
        ("delete", "/v1/sessions/nope"),
        ("post", "/v1/sessions/nope/query"),
    ])
    def test_unknown_session(self, method, path):
        client = make_client()
        kwargs = {"json": {"prompt": "q"}} if method == "post" else {}
        resp = getattr(client, method)(path, **kwargs)
        assert resp.status_code == 404 and error_code(resp) == "SessionNotFound"

    def test_delete_removes_state(self):
        client = make_client()
        sid = new_session(client)
        assert client.delete(f"/v1/sessions/{sid}").status_code == 200
        assert client.get(f"/v1/sessions/{sid}").status_code == 404
        assert len(client.app.state.gateway.store) == 0

    def test_ttl_expiry(self):
        clock = FakeClock()
        client = make_client(clock=clock, session_ttl_s=60)
        sid = new_session(client)
        clock.now = 59.0
        assert client.post(f"/v1/sessions/{sid}/query", json={"prompt": "q"}).status_code == 200
        clock.now = 59.0 + 59.0  # activity refreshed the deadline
        assert client.get(f"/v1/sessions/{sid}").status_code == 200
        clock.now += 60.0
        resp = client.post(f"/v1/sessions/{sid}/query", json={"prompt": "q"})
        assert resp.status_code == 404 and error_code(resp) == "SessionNotFound"

    def test_sessions_get_distinct_streams(self):
        client = make_client()
        a, b = new_session(client), new_session(client)
        arms = {
            sid: [client.post(f"/v1/sessions/{sid}/query", json={"prompt": "q"}).json()["model_id"] for _ in range(10)]
            for sid in (a, b)
        }
        assert arms[a] != arms[b]


class TestConcurrency:
    def test_same_session_serialized(self):
        gateway = Gateway(gateway_config_from_dict({"pool": POOL, "session": {"weights": IDENTITY}}))
        sid = gateway.create_session()
        rounds = []

        def worker():
            for _ in range(25):
                rounds.append(gateway.route_query(sid, "q")["round"])

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(rounds) == list(range(200))
        session = gateway.store.checkout(sid).session
        assert [r.round for r in session.records] == list(range(200))


class TestConfig:
    @pytest.mark.parametrize("data", [
        {"pool": POOL, "session_ttl_s": 0},
        {"pool": POOL, "surprise": True},
        {},
        {"pool": POOL, "scorer": "llm_judge"},
        {"pool": POOL[:1]},
    ])
    def test_invalid(self, data):
        with pytest.raises(InvalidConfig):
            Gateway(gateway_config_from_dict(data))

    def test_listen(self):
        cfg = gateway_config_from_dict({"pool": POOL, "listen": {"host": "0.0.0.0", "port": 9000}})
        assert (cfg.host, cfg.port) == ("0.0.0.0", 9000)
        assert isinstance(cfg, GatewayConfig)
