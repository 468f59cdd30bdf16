"""Completion and embedding abstraction with schema-validated outputs.

Every agent call in the engine routes through :func:`complete`, which renders
a named prompt template, sends it to a backend, validates the output against
a registered schema, and re-prompts with a repair instruction on malformed
output — bounded by the request's retry budget.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, runtime_checkable

import jsonschema
import numpy as np

from urbanlab.errors import EmptyText, ProviderFailure, SchemaViolation, UnparseableOutput
from urbanlab.provider.templates import TemplateStore

# ---------------------------------------------------------------------------
# Output schemas
# ---------------------------------------------------------------------------

# "text" is the degenerate schema: raw output is accepted verbatim.
TEXT_SCHEMA = "text"

_CARD_OBJECT = {
    "type": "object",
    "required": ["Name", "Description", "URL"],
    "properties": {
        "Name": {"type": "string", "minLength": 1},
        "Country/Region": {"type": "string"},
        "Time": {"type": "string"},
        "Type": {"type": "string"},
        "Description": {"type": "string", "minLength": 1},
        "URL": {"type": "string", "minLength": 1},
    },
}

SCHEMAS: dict[str, dict[str, Any]] = {
    "hypothesis_document": {
        "type": "object",
        "anyOf": [
            {"required": ["Context", "A", "B", "Mechanism", "Pattern"]},
            {"required": ["New CAMP"]},
        ],
    },
    # accepts the flat response shape and the nested listing shape
    "review_document": {
        "type": "object",
        "properties": {
            "Decision": {"type": "string"},
            "Rating": {"type": "number", "minimum": 0, "maximum": 10},
            "Soundness": {"type": "number", "minimum": 0, "maximum": 4},
            "Presentation": {"type": "number", "minimum": 0, "maximum": 4},
            "Contribution": {"type": "number", "minimum": 0, "maximum": 4},
            "Strengths": {"type": "array", "items": {"type": "string"}},
            "Weaknesses": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "Suggestions": {"type": "array", "items": {"type": "string"}},
            "Review": {
                "type": "object",
                "properties": {
                    "Decision": {"type": "string"},
                    "Rating": {"type": "number", "minimum": 0, "maximum": 10},
                    "Soundness": {"type": "number", "minimum": 0, "maximum": 4},
                    "Presentation": {"type": "number", "minimum": 0, "maximum": 4},
                    "Contribution": {"type": "number", "minimum": 0, "maximum": 4},
                },
                "required": ["Rating", "Soundness", "Presentation", "Contribution"],
            },
        },
        "anyOf": [
            {"required": ["Rating", "Soundness", "Presentation", "Contribution", "Weaknesses"]},
            {"required": ["Review", "Weaknesses"]},
        ],
    },
    "data_cards": {
        "type": "object",
        "required": ["Cards"],
        "properties": {"Cards": {"type": "array", "items": _CARD_OBJECT}},
    },
    "experiment_plan": {
        "type": "object",
        "required": ["AnalyzingAgentPlan"],
        "properties": {
            "AnalyzingAgentPlan": {
                "type": "object",
                "additionalProperties": {
                    "type": "object",
                    "required": ["tasks"],
                    "properties": {
                        "tasks": {"type": "array", "items": {"type": "string"}}
                    },
                },
            }
        },
    },
    "script_artifact": {
        "type": "object",
        "required": ["Language", "Body"],
        "properties": {
            "Language": {"type": "string", "minLength": 1},
            "Body": {"type": "string", "minLength": 1},
            "Inputs": {"type": "array", "items": {"type": "string"}},
            "Outputs": {"type": "array", "items": {"type": "string"}},
        },
    },
    "patch_response": {
        "type": "object",
        "required": ["Action"],
        "properties": {
            "Action": {"type": "string", "enum": ["patch", "unpatchable"]},
            "Body": {"type": "string"},
            "Summary": {"type": "string"},
        },
    },
}


def register_schema(schema_id: str, schema: dict[str, Any]) -> None:
    SCHEMAS[schema_id] = schema


# ---------------------------------------------------------------------------
# Requests / responses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompletionRequest:
    template_id: str
    bindings: Mapping[str, Any]
    schema_id: str = TEXT_SCHEMA
    temperature: float = 0.0
    seed: int = 0
    max_retries: int = 2


@dataclass(frozen=True)
class CompletionResponse:
    raw: str
    parsed: Any
    retries: int = 0
    usage: Mapping[str, int] | None = None


@dataclass(frozen=True)
class EmbeddingVector:
    """Unit-norm embedding; entries are finite float64."""

    values: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


@runtime_checkable
class CompletionBackend(Protocol):
    def generate(self, req: CompletionRequest, prompt: str) -> str:
        """Return raw model output for one rendered prompt."""
        ...


@runtime_checkable
class EmbeddingBackend(Protocol):
    dimension: int

    def embed(self, text: str) -> EmbeddingVector: ...


def fingerprint(req: CompletionRequest) -> str:
    """Stable digest over (template id, canonicalized bindings, schema id, seed)."""
    basis = json.dumps(
        {
            "template": req.template_id,
            "bindings": req.bindings,
            "schema": req.schema_id,
            "seed": req.seed,
        },
        ensure_ascii=False,
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(basis.encode("utf-8")).hexdigest()


_REPAIR_INSTRUCTION = (
    "\n\nThe previous output did not satisfy the required schema ({error}). "
    "Respond again with a single valid JSON document and nothing else."
)


def _try_parse(raw: str, schema_id: str) -> tuple[Any, str | None]:
    if schema_id == TEXT_SCHEMA:
        return raw, None
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError as exc:
        return None, f"invalid JSON: {exc}"
    try:
        jsonschema.validate(parsed, SCHEMAS[schema_id])
    except jsonschema.ValidationError as exc:
        return None, f"schema {schema_id}: {exc.message}"
    return parsed, None


def complete(
    req: CompletionRequest,
    backend: CompletionBackend,
    templates: TemplateStore | None = None,
) -> CompletionResponse:
    """Render, send, validate; re-prompt on malformed output up to the budget."""
    store = templates or TemplateStore.default()
    if req.schema_id != TEXT_SCHEMA and req.schema_id not in SCHEMAS:
        raise SchemaViolation(f"schema id {req.schema_id!r} is not registered")
    prompt = store.render(req.template_id, req.bindings)

    attempts: list[str] = []
    error: str | None = None
    for attempt in range(req.max_retries + 1):
        effective = prompt if error is None else prompt + _REPAIR_INSTRUCTION.format(error=error)
        try:
            raw = backend.generate(req, effective)
        except ProviderFailure:
            raise
        except Exception as exc:
            raise ProviderFailure(f"backend failed: {exc}") from exc
        attempts.append(raw)
        parsed, error = _try_parse(raw, req.schema_id)
        if error is None:
            return CompletionResponse(raw=raw, parsed=parsed, retries=attempt)
    raise UnparseableOutput(
        f"output never satisfied schema {req.schema_id!r} "
        f"after {req.max_retries + 1} attempt(s): {error}",
        attempts=attempts,
    )


# ---------------------------------------------------------------------------
# Deterministic hash-projection embedder
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class HashEmbedder:
    """Seeded bag-of-tokens projection into a fixed-dimension unit sphere.

    Each distinct token maps (via a keyed hash) to a pseudo-random gaussian
    direction; a text embeds as the count-weighted sum of its token
    directions, normalized.  Equal texts embed equally; texts sharing no
    tokens are near-orthogonal in expectation.
    """

    def __init__(self, dimension: int = 64, seed: int = 0) -> None:
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = int(dimension)
        self.seed = int(seed)
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_direction(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is not None:
            return cached
        digest = hashlib.blake2b(
            token.encode("utf-8"), digest_size=16, key=str(self.seed).encode()
        ).digest()
        entropy = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
        rng = np.random.default_rng(np.random.SeedSequence(entropy))
        direction = rng.standard_normal(self.dimension)
        self._token_cache[token] = direction
        return direction

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise EmptyText("cannot embed empty text")
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            tokens = [text]
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokens:
            vec += self._token_direction(token)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec = self._token_direction("\x00" + text)
            norm = float(np.linalg.norm(vec))
        return EmbeddingVector(values=vec / norm)
