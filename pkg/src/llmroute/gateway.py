"""Session-scoped routing over HTTP.

Endpoints::

    POST   /v1/sessions                 -> {"session_id"}
    POST   /v1/sessions/{id}/query      -> answer plus routing metadata
    GET    /v1/sessions/{id}            -> policy snapshot, round, metrics
    DELETE /v1/sessions/{id}

Sessions live in memory and are evicted after ``session_ttl_s`` seconds
without a request. Requests to one session are serialized by a per-session
lock; different sessions never wait on each other.
"""

from __future__ import annotations

import argparse
import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import BackendRegistry
from .config import build_pool, is_simulated, load_structured
from .core import (
    InvalidConfig,
    ModelPool,
    PolicyKind,
    RoutingError,
    SessionConfig,
    session_config_from_dict,
)
from .engine import EmptySession, RoundFailed, Session, run_round, session_metrics
from .scoring import LlmJudgeScorer, OracleScorer, Scorer

JUDGE_REF = "__judge__"


class SessionNotFound(RoutingError, KeyError):
    code = "SessionNotFound"


@dataclass
class GatewayConfig:
    pool: list[dict[str, Any]]
    session: SessionConfig = field(default_factory=SessionConfig)
    scorer: str = "oracle"
    judge: dict[str, Any] | None = None
    session_ttl_s: float = 900.0
    host: str = "127.0.0.1"
    port: int = 8080

    def __post_init__(self) -> None:
        if not self.session_ttl_s > 0:
            raise InvalidConfig("session_ttl_s must be > 0")
        if self.scorer not in ("oracle", "llm_judge"):
            raise InvalidConfig(f"scorer must be oracle or llm_judge, got {self.scorer!r}")
        if self.scorer == "llm_judge" and not (self.judge and self.judge.get("url")):
            raise InvalidConfig("llm_judge scorer needs judge.url")


def gateway_config_from_dict(data: dict[str, Any]) -> GatewayConfig:
    data = dict(data)
    listen = data.pop("listen", {}) or {}
    session = session_config_from_dict(data.pop("session", {}) or {})
    scorer = data.pop("scorer", "oracle")
    judge = data.pop("judge", None)
    if isinstance(scorer, dict):
        judge = scorer.get("judge", judge)
        scorer = scorer.get("kind", "oracle")
    if "pool" not in data:
        raise InvalidConfig("gateway config needs a pool")
    pool = data.pop("pool")
    ttl = float(data.pop("session_ttl_s", 900.0))
    if data:
        raise InvalidConfig(f"unknown gateway config keys: {sorted(data)}")
    return GatewayConfig(
        pool=pool,
        session=session,
        scorer=scorer,
        judge=judge,
        session_ttl_s=ttl,
        host=listen.get("host", "127.0.0.1"),
        port=int(listen.get("port", 8080)),
    )


@dataclass
class _Entry:
    session: Session
    lock: threading.Lock
    expires_at: float


class SessionStore:
    """In-memory sessions with idle-TTL eviction."""

    def __init__(self, ttl_s: float, clock: Callable[[], float] = time.monotonic):
        self.ttl_s = ttl_s
        self.clock = clock
        self._entries: dict[str, _Entry] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._lock:
            self._evict_locked()
            self._entries[session.id] = _Entry(session, threading.Lock(), self.clock() + self.ttl_s)

    def checkout(self, session_id: str) -> _Entry:
        """Return a live entry and refresh its deadline."""
        with self._lock:
            self._evict_locked()
            entry = self._entries.get(session_id)
            if entry is None:
                raise SessionNotFound(f"no session {session_id!r}")
            entry.expires_at = self.clock() + self.ttl_s
            return entry

    def delete(self, session_id: str) -> None:
        with self._lock:
            if self._entries.pop(session_id, None) is None:
                raise SessionNotFound(f"no session {session_id!r}")

    def __len__(self) -> int:
        with self._lock:
            self._evict_locked()
            return len(self._entries)

    def _evict_locked(self) -> None:
        now = self.clock()
        for sid in [sid for sid, e in self._entries.items() if e.expires_at <= now]:
            del self._entries[sid]


class QueryBody(BaseModel):
    prompt: str = Field(min_length=1)
    human_response: str | None = None


_STATUS = {
    "SessionNotFound": 404,
    "RoundFailed": 502,
    "EmptySession": 409,
}


def _error(exc: RoutingError) -> JSONResponse:
    status = _STATUS.get(exc.code, 400 if isinstance(exc, InvalidConfig) else 500)
    return JSONResponse(status_code=status, content={"error": {"code": exc.code, "message": str(exc)}})


class Gateway:
    """Owns the pool, backends, scorer and session store behind the app."""

    def __init__(
        self,
        config: GatewayConfig,
        registry: BackendRegistry | None = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.config = config
        self.pool: ModelPool
        self.pool, self.registry = build_pool(config.pool, registry, config.session.latency_floor)
        self.simulated = is_simulated(config.pool)
        self.scorer = self._make_scorer()
        self.store = SessionStore(config.session_ttl_s, clock)
        self._counter = itertools.count()

    def _make_scorer(self) -> Scorer:
        if self.config.scorer == "llm_judge":
            from .backends import register_http_backend

            judge = self.config.judge
            register_http_backend(
                self.registry,
                JUDGE_REF,
                judge["url"],
                judge.get("model", "judge"),
                token_env=judge.get("token_env"),
                timeout_s=float(judge.get("timeout_s", 60.0)),
            )
            return LlmJudgeScorer(self.registry, JUDGE_REF)
        return OracleScorer()

    def create_session(self, overrides: dict[str, Any] | None = None) -> str:
        if self.config.scorer == "oracle" and not self.simulated:
            raise InvalidConfig(
                "live backends cannot be scored by the oracle scorer; configure an llm_judge scorer"
            )
        overrides = dict(overrides or {})
        index = next(self._counter)
        if "rng_seed" not in overrides:
            overrides["rng_seed"] = (self.config.session.rng_seed + index) % 2**64
        config = session_config_from_dict(overrides, self.config.session)
        session = Session(config=config, pool=self.pool, registry=self.registry, scorer=self.scorer)
        self.store.add(session)
        return session.id

    def route_query(self, session_id: str, prompt: str, human_response: str | None = None) -> dict[str, Any]:
        entry = self.store.checkout(session_id)
        with entry.lock:
            session = entry.session
            answer, record = run_round(session, prompt, human_response)
            pinned = session.pinned
            return {
                "answer": answer,
                "model_id": record.model_id,
                "latency_ms": record.latency_ms,
                "score": record.accuracy,
                "round": record.round,
                "converged": pinned is not None,
                "pinned_model": None if pinned is None else self.pool[pinned].id,
            }

    def session_state(self, session_id: str) -> dict[str, Any]:
        entry = self.store.checkout(session_id)
        with entry.lock:
            session = entry.session
            kind = session.config.policy_kind
            label = "Q" if kind is PolicyKind.QL else "P"
            try:
                metrics = session_metrics(session).as_dict()
            except EmptySession:
                metrics = None
            return {
                "session_id": session.id,
                "policy_kind": kind.value,
                "policy_snapshot": {label: session.policy_snapshot()},
                "round": session.round,
                "converged": session.pinned is not None,
                "pinned_model": None if session.pinned is None else self.pool[session.pinned].id,
                "metrics": metrics,
            }

    def delete_session(self, session_id: str) -> None:
        self.store.delete(session_id)


def create_app(config: GatewayConfig, registry: BackendRegistry | None = None, clock=time.monotonic) -> FastAPI:
    gateway = Gateway(config, registry, clock)
    app = FastAPI(title="llmroute gateway")
    app.state.gateway = gateway

    @app.exception_handler(RoutingError)
    async def _routing_error(request: Request, exc: RoutingError):
        return _error(exc)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "InvalidConfig", "message": str(exc.errors())}},
        )

    @app.post("/v1/sessions", status_code=201)
    async def create_session(request: Request):
        raw = await request.body()
        overrides: Any = {}
        if raw.strip():
            try:
                overrides = await request.json()
            except ValueError:
                raise InvalidConfig("request body is not JSON") from None
        if not isinstance(overrides, dict):
            raise InvalidConfig("session overrides must be a JSON object")
        return {"session_id": gateway.create_session(overrides)}

    # Plain ``def`` endpoints run in the threadpool, so a slow backend call
    # only blocks its own session's lock.
    @app.post("/v1/sessions/{session_id}/query")
    def query(session_id: str, body: QueryBody):
        return gateway.route_query(session_id, body.prompt, body.human_response)

    @app.get("/v1/sessions/{session_id}")
    def state(session_id: str):
        return gateway.session_state(session_id)

    @app.delete("/v1/sessions/{session_id}")
    def delete(session_id: str):
        gateway.delete_session(session_id)
        return {"deleted": session_id}

    return app


def load_gateway_config(path: str) -> GatewayConfig:
    return gateway_config_from_dict(load_structured(path))


def main(argv: list[str] | None = None) -> None:
    import uvicorn

    parser = argparse.ArgumentParser(prog="python -m llmroute.gateway")
    parser.add_argument("--config", required=True, help="gateway config file (YAML or JSON)")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    args = parser.parse_args(argv)
    config = load_gateway_config(args.config)
    uvicorn.run(create_app(config), host=args.host or config.host, port=args.port or config.port)


if __name__ == "__main__":
    main()
