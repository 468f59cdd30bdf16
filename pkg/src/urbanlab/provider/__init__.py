from urbanlab.provider.base import (
    CompletionBackend,
    CompletionRequest,
    CompletionResponse,
    EmbeddingBackend,
    EmbeddingVector,
    HashEmbedder,
    SCHEMAS,
    TEXT_SCHEMA,
    complete,
    fingerprint,
    register_schema,
)
from urbanlab.provider.mock import MockBackend, default_response
from urbanlab.provider.remote import HttpCompletionBackend, HttpEmbeddingBackend, build_backends
from urbanlab.provider.templates import TemplateStore

__all__ = [
    "CompletionBackend",
    "CompletionRequest",
    "CompletionResponse",
    "EmbeddingBackend",
    "EmbeddingVector",
    "HashEmbedder",
    "HttpCompletionBackend",
    "HttpEmbeddingBackend",
    "MockBackend",
    "SCHEMAS",
    "TEXT_SCHEMA",
    "TemplateStore",
    "build_backends",
    "complete",
    "default_response",
    "fingerprint",
    "register_schema",
]
