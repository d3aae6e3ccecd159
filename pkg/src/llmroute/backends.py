"""Query execution over heterogeneous model backends.

``SimulatedBackend`` draws latency and response quality from seeded
distributions for desk-scale experiments. ``HttpBackend`` talks to any
chat-completion endpoint (``POST {model, messages, temperature}`` ->
``choices[0].message.content``) and measures wall-clock latency.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Any, Protocol
from urllib.parse import urlparse

import httpx
import numpy as np

from .core import InvalidConfig, RoutingError
from .reward import DEFAULT_LATENCY_FLOOR_MS

# Response metadata key carrying a simulated backend's drawn quality.
TRUE_QUALITY_KEY = "true_quality"


class BackendError(RoutingError):
    code = "BackendError"


class BackendUnavailable(BackendError):
    code = "BackendUnavailable"


class BackendTimeout(BackendError, TimeoutError):
    code = "Timeout"


@dataclass(frozen=True)
class QueryRequest:
    session_id: str
    prompt: str
    round: int = 0

    def __post_init__(self) -> None:
        if not self.prompt:
            raise InvalidConfig("prompt must be nonempty")


@dataclass(frozen=True)
class BackendResponse:
    text: str
    latency_ms: float
    backend_id: str
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.latency_ms > 0:
            raise ValueError(f"latency_ms must be > 0, got {self.latency_ms}")


class Backend(Protocol):
    backend_id: str

    def execute(self, request: QueryRequest, rng: np.random.Generator) -> BackendResponse: ...


@dataclass(frozen=True)
class SimulatedBackendSpec:
    """Distribution parameters of one simulated model.

    Latency is ``base_latency_ms * exp(latency_jitter * Z)``: ``latency_jitter``
    is the log-space standard deviation of the multiplier, so the mean latency
    is ``base_latency_ms * exp(latency_jitter**2 / 2)``. Quality is
    ``mean_quality + quality_jitter * Z`` clipped to [0, 1].
    """

    base_latency_ms: float
    mean_quality: float
    latency_jitter: float = 0.0
    quality_jitter: float = 0.0
    canned_text: str | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.base_latency_ms) and self.base_latency_ms > 0):
            raise InvalidConfig("base_latency_ms must be > 0")
        if not 0.0 < self.mean_quality <= 1.0:
            raise InvalidConfig("mean_quality must be in (0, 1]")
        if self.latency_jitter < 0 or self.quality_jitter < 0:
            raise InvalidConfig("jitter values must be >= 0")

    @property
    def mean_latency_ms(self) -> float:
        return self.base_latency_ms * math.exp(self.latency_jitter**2 / 2.0)


class SimulatedBackend:
    def __init__(
        self,
        backend_id: str,
        spec: SimulatedBackendSpec,
        latency_floor: float = DEFAULT_LATENCY_FLOOR_MS,
    ) -> None:
        self.backend_id = backend_id
        self.spec = spec
        self.latency_floor = latency_floor

    def execute(self, request: QueryRequest, rng: np.random.Generator) -> BackendResponse:
        # Exactly two normal draws per call, whatever the jitter settings.
        z_latency, z_quality = rng.standard_normal(2)
        latency = self.spec.base_latency_ms
        if self.spec.latency_jitter:
            latency *= math.exp(self.spec.latency_jitter * z_latency)
        latency = max(latency, self.latency_floor)
        quality = self.spec.mean_quality
        if self.spec.quality_jitter:
            quality = min(1.0, max(0.0, quality + self.spec.quality_jitter * z_quality))
        template = self.spec.canned_text or "[{backend}] response to: {prompt}"
        text = template.format(backend=self.backend_id, prompt=request.prompt, round=request.round)
        return BackendResponse(
            text=text,
            latency_ms=latency,
            backend_id=self.backend_id,
            metadata={TRUE_QUALITY_KEY: quality},
        )


class FlakyBackend:
    """Wraps a backend and fails the first ``failures`` calls (for tests and drills)."""

    def __init__(self, inner: Backend, failures: int, exc: type[BackendError] = BackendUnavailable):
        self.inner = inner
        self.backend_id = inner.backend_id
        self.remaining = failures
        self.exc = exc

    def execute(self, request: QueryRequest, rng: np.random.Generator) -> BackendResponse:
        if self.remaining > 0:
            self.remaining -= 1
            raise self.exc(f"{self.backend_id}: injected failure")
        return self.inner.execute(request, rng)


@dataclass(frozen=True)
class HttpBackendConfig:
    url: str
    model: str
    token_env: str | None = None
    timeout_s: float = 30.0
    temperature: float = 0.0


class HttpBackend:
    def __init__(self, backend_id: str, config: HttpBackendConfig, client: httpx.Client | None = None):
        self.backend_id = backend_id
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout_s)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.token_env:
            token = os.environ.get(self.config.token_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def execute(self, request: QueryRequest, rng: np.random.Generator | None = None) -> BackendResponse:
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.config.temperature,
        }
        start = time.perf_counter()
        try:
            resp = self._client.post(
                self.config.url, json=body, headers=self._headers(), timeout=self.config.timeout_s
            )
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"{self.backend_id}: timed out after {self.config.timeout_s}s") from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"{self.backend_id}: {exc}") from exc
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        if resp.status_code >= 400:
            raise BackendUnavailable(f"{self.backend_id}: HTTP {resp.status_code}")
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"{self.backend_id}: malformed completion body") from exc
        if not isinstance(text, str):
            raise BackendUnavailable(f"{self.backend_id}: completion content is not text")
        return BackendResponse(text=text, latency_ms=max(elapsed_ms, 1e-3), backend_id=self.backend_id)

    def close(self) -> None:
        self._client.close()


class BackendRegistry:
    """Name -> backend handle. Handles are shared read-only across sessions."""

    def __init__(self) -> None:
        self._backends: dict[str, Backend] = {}

    def register(self, name: str, backend: Backend) -> str:
        self._backends[name] = backend
        return name

    def get(self, name: str) -> Backend:
        try:
            return self._backends[name]
        except KeyError:
            raise BackendUnavailable(f"no backend registered under {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._backends

    def names(self) -> list[str]:
        return list(self._backends)

    def execute(self, backend_ref: str, request: QueryRequest, rng: np.random.Generator) -> BackendResponse:
        return self.get(backend_ref).execute(request, rng)


def register_http_backend(
    registry: BackendRegistry,
    name: str,
    url: str,
    model: str,
    token_env: str | None = None,
    timeout_s: float = 30.0,
    client: httpx.Client | None = None,
) -> str:
    """Register a chat-completion endpoint.

    Only the URL shape is checked here; reachability is discovered when the
    backend is first executed.
    """
    parsed = urlparse(url or "")
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise InvalidConfig(f"malformed backend URL {url!r}")
    if not model:
        raise InvalidConfig("model name is required")
    if not timeout_s > 0:
        raise InvalidConfig("timeout must be > 0")
    config = HttpBackendConfig(url=url, model=model, token_env=token_env, timeout_s=timeout_s)
    return registry.register(name, HttpBackend(name, config, client=client))
