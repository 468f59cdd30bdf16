"""HTTP backends speaking a generic chat-completion / embedding wire shape.

Endpoint, model name, and the *name* of the environment variable holding the
API key are configuration; no key or vendor endpoint is ever hardcoded.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Any

import httpx
import numpy as np

from urbanlab.errors import EmptyText, InvalidConfig, ProviderFailure
from urbanlab.provider.base import (
    CompletionRequest,
    EmbeddingBackend,
    EmbeddingVector,
    HashEmbedder,
)
from urbanlab.provider.mock import MockBackend


class HttpCompletionBackend:
    def __init__(
        self,
        endpoint: str,
        model: str,
        auth_env: str | None = None,
        timeout: float = 60.0,
        max_in_flight: int = 4,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.timeout = timeout
        self._slots = threading.Semaphore(max_in_flight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            key = os.environ.get(self.auth_env)
            if not key:
                raise ProviderFailure(f"environment variable {self.auth_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def generate(self, req: CompletionRequest, prompt: str) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": req.temperature,
            "seed": req.seed,
        }
        with self._slots:
            try:
                response = httpx.post(
                    self.endpoint, json=payload, headers=self._headers(), timeout=self.timeout
                )
                response.raise_for_status()
            except httpx.HTTPError as exc:
                raise ProviderFailure(f"completion request failed: {exc}") from exc
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, json.JSONDecodeError) as exc:
            raise ProviderFailure(f"unexpected completion response shape: {exc}") from exc


class HttpEmbeddingBackend:
    def __init__(
        self,
        endpoint: str,
        model: str,
        dimension: int,
        auth_env: str | None = None,
        timeout: float = 60.0,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.dimension = int(dimension)
        self.auth_env = auth_env
        self.timeout = timeout

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise EmptyText("cannot embed empty text")
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            key = os.environ.get(self.auth_env)
            if not key:
                raise ProviderFailure(f"environment variable {self.auth_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = httpx.post(
                self.endpoint,
                json={"model": self.model, "input": text},
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            values = np.asarray(response.json()["data"][0]["embedding"], dtype=np.float64)
        except (httpx.HTTPError, KeyError, IndexError, json.JSONDecodeError) as exc:
            raise ProviderFailure(f"embedding request failed: {exc}") from exc
        if values.shape != (self.dimension,):
            raise ProviderFailure(
                f"embedding dimension {values.shape} does not match configured {self.dimension}"
            )
        norm = float(np.linalg.norm(values))
        if norm == 0.0 or not np.isfinite(values).all():
            raise ProviderFailure("embedding is degenerate")
        return EmbeddingVector(values=values / norm)


def build_backends(config: dict[str, Any] | str | Path) -> tuple[Any, EmbeddingBackend]:
    """Build (completion backend, embedding backend) from a config mapping or file.

    Config shape::

        {"completion": {"kind": "mock" | "http", ...},
         "embedding":  {"kind": "hash" | "http", "dimension": 64, ...}}
    """
    if isinstance(config, (str, Path)):
        try:
            config = json.loads(Path(config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot load provider config: {exc}") from exc
    assert isinstance(config, dict)

    comp_cfg = dict(config.get("completion", {"kind": "mock"}))
    kind = comp_cfg.pop("kind", "mock")
    if kind == "mock":
        script_path = comp_cfg.pop("script_path", None)
        if script_path:
            completion: Any = MockBackend.from_script_file(script_path, **comp_cfg)
        else:
            completion = MockBackend(**comp_cfg)
    elif kind == "http":
        try:
            completion = HttpCompletionBackend(**comp_cfg)
        except TypeError as exc:
            raise InvalidConfig(f"bad http completion config: {exc}") from exc
    else:
        raise InvalidConfig(f"unknown completion backend kind {kind!r}")

    emb_cfg = dict(config.get("embedding", {"kind": "hash"}))
    ekind = emb_cfg.pop("kind", "hash")
    if ekind == "hash":
        embedder: EmbeddingBackend = HashEmbedder(**emb_cfg)
    elif ekind == "http":
        try:
            embedder = HttpEmbeddingBackend(**emb_cfg)
        except TypeError as exc:
            raise InvalidConfig(f"bad http embedding config: {exc}") from exc
    else:
        raise InvalidConfig(f"unknown embedding backend kind {ekind!r}")
    return completion, embedder
