"""Code-snippet knowledge base with cosine retrieval.

Snippets embed as their task tags plus the head of the body; retrieval uses
the same exhaustive ranking contract as data-card matching.
"""

from __future__ import annotations

import threading
from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from urbanlab.errors import DimensionMismatch, DuplicateId

if TYPE_CHECKING:
    from urbanlab.provider import EmbeddingBackend

BODY_HEAD_CHARS = 2000


class CodeSnippet(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    language_tag: str
    task_tags: tuple[str, ...]
    body: str
    source: str = ""

    @model_validator(mode="after")
    def _check(self) -> "CodeSnippet":
        if not self.body.strip():
            raise ValueError("snippet body must be non-empty")
        if not self.task_tags:
            raise ValueError("snippet needs at least one task tag")
        return self


class RankedSnippet(BaseModel):
    model_config = ConfigDict(frozen=True)

    snippet_id: str
    score: float = Field(ge=-1.0 - 1e-9, le=1.0 + 1e-9)


def snippet_embedding_text(snippet: CodeSnippet) -> str:
    return "\n".join(snippet.task_tags) + "\n" + snippet.body[:BODY_HEAD_CHARS]


class SnippetPool:
    def __init__(self, dimension: int) -> None:
        self.dimension = int(dimension)
        self._snippets: dict[str, CodeSnippet] = {}
        self._vectors: dict[str, np.ndarray] = {}
        self._write_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._snippets)

    def snippet(self, snippet_id: str) -> CodeSnippet:
        return self._snippets[snippet_id]

    def snippets(self) -> list[CodeSnippet]:
        return [self._snippets[sid] for sid in sorted(self._snippets)]

    def index_snippet(self, snippet: CodeSnippet, embedder: "EmbeddingBackend") -> str:
        if embedder.dimension != self.dimension:
            raise DimensionMismatch(
                f"embedder dimension {embedder.dimension} != pool dimension {self.dimension}"
            )
        with self._write_lock:
            existing = self._snippets.get(snippet.id)
            if existing is not None:
                if existing == snippet:
                    return snippet.id
                raise DuplicateId(f"snippet id {snippet.id!r} already indexed with different content")
            self._snippets[snippet.id] = snippet
            self._vectors[snippet.id] = embedder.embed(snippet_embedding_text(snippet)).values
        return snippet.id


def retrieve_snippets(
    pool: SnippetPool,
    query: str,
    k: int,
    embedder: "EmbeddingBackend",
) -> list[RankedSnippet]:
    """Top-k snippets by cosine similarity; empty pool yields an empty list."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ids = sorted(pool._snippets)
    if not ids:
        return []
    query_vec = embedder.embed(query).values
    matrix = np.stack([pool._vectors[sid] for sid in ids])
    scores = matrix @ query_vec
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [
        RankedSnippet(snippet_id=ids[i], score=float(np.clip(scores[i], -1.0, 1.0)))
        for i in order[: min(k, len(ids))]
    ]
