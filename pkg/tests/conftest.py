import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from llmroute.backends import BackendRegistry, SimulatedBackend, SimulatedBackendSpec
from llmroute.core import ModelDescriptor, ModelPool, RewardWeights, SessionConfig
from llmroute.engine import Session
from llmroute.scoring import OracleScorer

# w_a=1, w_c=0, w_l=1 and latency 1000 ms make the raw reward equal the
# accuracy exactly, so arm rewards can be set directly through quality.
IDENTITY_WEIGHTS = RewardWeights(w_a=1.0, w_c=0.0, w_l=1.0, t_scaling=3.0)
DETERMINISTIC_REWARDS = (0.9, 0.5, 0.4, 0.2)


def deterministic_pool(rewards=DETERMINISTIC_REWARDS, costs=None):
    registry = BackendRegistry()
    models = []
    for i, r in enumerate(rewards):
        name = f"arm{i}"
        registry.register(name, SimulatedBackend(name, SimulatedBackendSpec(1000.0, r)))
        models.append(ModelDescriptor(name, 0.1 if costs is None else costs[i]))
    return ModelPool(models), registry


def deterministic_session(config: SessionConfig, rewards=DETERMINISTIC_REWARDS) -> Session:
    pool, registry = deterministic_pool(rewards)
    return Session(config=config, pool=pool, registry=registry, scorer=OracleScorer())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class StubServer:
    """Chat-completion stub. ``replies`` maps model name -> reply text."""

    def __init__(self, delay_s=0.0, replies=None, status=200):
        self.delay_s = delay_s
        self.replies = replies or {}
        self.status = status
        self.requests = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                stub.requests.append({"body": body, "headers": dict(self.headers)})
                if stub.delay_s:
                    time.sleep(stub.delay_s)
                if stub.status != 200:
                    self.send_response(stub.status)
                    self.end_headers()
                    return
                model = body.get("model", "")
                content = stub.replies.get(model, f"answer from {model}")
                payload = json.dumps({"choices": [{"message": {"role": "assistant", "content": content}}]}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}/v1/chat/completions"
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub_server():
    with StubServer() as server:
        yield server


# One line per acceptance criterion, collected by tests/test_acceptance.py and
# printed at the end of the run so it shows without -s.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
