"""Structured config files (YAML or JSON) shared by the harness and the gateway.

A pool entry is either simulated::

    {id: model-a, cost: 0.4, base_latency_ms: 800, latency_jitter: 0.2,
     mean_quality: 0.75, quality_jitter: 0.05}

or a live chat-completion endpoint::

    {id: model-a, cost: 0.4, url: http://host/v1/chat/completions,
     model: served-name, token_env: MODEL_A_TOKEN, timeout_s: 30}

Tokens are only ever referenced by environment-variable name.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

import yaml

from .backends import (
    BackendRegistry,
    SimulatedBackend,
    SimulatedBackendSpec,
    register_http_backend,
)
from .core import InvalidConfig, ModelDescriptor, ModelPool, validate_pool
from .reward import DEFAULT_LATENCY_FLOOR_MS

SIM_KEYS = ("base_latency_ms", "mean_quality", "latency_jitter", "quality_jitter", "canned_text")


def load_structured(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InvalidConfig(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: top level must be a mapping")
    return data


def simulated_spec(entry: dict[str, Any]) -> SimulatedBackendSpec:
    try:
        return SimulatedBackendSpec(**{k: entry[k] for k in SIM_KEYS if k in entry})
    except TypeError as exc:
        raise InvalidConfig(f"pool entry {entry.get('id')!r}: {exc}") from None


def build_pool(
    entries: Iterable[dict[str, Any]],
    registry: BackendRegistry | None = None,
    latency_floor: float = DEFAULT_LATENCY_FLOOR_MS,
) -> tuple[ModelPool, BackendRegistry]:
    """Turn pool entries into a validated pool plus a registry of their backends."""
    registry = registry or BackendRegistry()
    models = []
    for entry in entries:
        if not isinstance(entry, dict) or "id" not in entry:
            raise InvalidConfig(f"pool entry needs an id: {entry!r}")
        model_id = str(entry["id"])
        ref = str(entry.get("backend_ref", model_id))
        if "url" in entry:
            register_http_backend(
                registry,
                ref,
                entry["url"],
                entry.get("model", model_id),
                token_env=entry.get("token_env"),
                timeout_s=float(entry.get("timeout_s", 30.0)),
            )
        elif "base_latency_ms" in entry:
            registry.register(ref, SimulatedBackend(ref, simulated_spec(entry), latency_floor))
        elif ref not in registry:
            raise InvalidConfig(f"pool entry {model_id!r} has neither url nor simulated parameters")
        models.append(
            ModelDescriptor(
                id=model_id,
                cost_per_query=entry.get("cost", entry.get("cost_per_query", 0.0)),
                backend_ref=ref,
                display_name=str(entry.get("display_name", model_id)),
            )
        )
    return validate_pool(models), registry


def is_simulated(entries: Iterable[dict[str, Any]]) -> bool:
    return all("url" not in e for e in entries)
