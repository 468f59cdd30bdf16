"""The four hypothesis transformations.

Each operation prompts the completion provider with a transformation-specific
template, rebuilds the returned document into a lineage-stamped child, and
validates it.  Invalid provider output is re-prompted up to a fixed budget.

Field-preservation contracts (e.g. context transfer keeps A/B/M verbatim)
are hard postconditions under the deterministic mock backend; under live
backends they downgrade to logged warnings, since live models paraphrase.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Sequence

from urbanlab.camp import (
    CampHypothesis,
    InnovationType,
    content_id,
    ensure_valid,
    parse_hypothesis,
    serialize_hypothesis,
)
from urbanlab.errors import (
    IdenticalParents,
    InvalidChild,
    InvalidHypothesis,
    MalformedDocument,
    SameContext,
    SchemaViolation,
    TooFewParents,
)
from urbanlab.provider import CompletionRequest, MockBackend, TemplateStore, complete

logger = logging.getLogger("urbanlab.ideation")

REPROMPT_BUDGET = 3


def _build_child(
    parsed: dict[str, Any],
    parents: Sequence[CampHypothesis],
    ttype: InnovationType,
) -> CampHypothesis:
    doc = dict(parsed)
    for engine_key in ("Id", "Status", "Tier", "Lineage"):
        doc.pop(engine_key, None)
    doc["InnovationType"] = ttype.value
    doc.setdefault("Innovation rationale", f"Derived via {ttype.value}.")
    doc["Lineage"] = {
        "Parents": [p.id for p in parents],
        "Transformation": ttype.value,
        "Generation": 1 + max(p.lineage.generation for p in parents),
    }
    doc["Status"] = "draft"
    doc["Id"] = content_id(doc)
    return parse_hypothesis(doc)


def _complete_child(
    template_id: str,
    bindings: dict[str, Any],
    provider: Any,
    seed: int,
    parents: Sequence[CampHypothesis],
    ttype: InnovationType,
    postcheck: Callable[[CampHypothesis], list[str]] | None = None,
    templates: TemplateStore | None = None,
) -> CampHypothesis:
    req = CompletionRequest(
        template_id=template_id,
        bindings=bindings,
        schema_id="hypothesis_document",
        seed=seed,
    )
    last_error: Exception | None = None
    for _ in range(REPROMPT_BUDGET):
        response = complete(req, provider, templates)
        try:
            child = _build_child(response.parsed, parents, ttype)
            problems = postcheck(child) if postcheck else []
            if problems:
                raise InvalidChild("; ".join(problems))
            return child
        except (InvalidHypothesis, SchemaViolation, MalformedDocument, InvalidChild) as exc:
            last_error = exc
    raise InvalidChild(
        f"provider output failed validation after {REPROMPT_BUDGET} attempt(s): {last_error}"
    )


def _strict(provider: Any) -> bool:
    return isinstance(provider, MockBackend)


def _preservation_problems(
    child: CampHypothesis,
    parent: CampHypothesis,
    fixed_fields: Sequence[str],
    strict: bool,
) -> list[str]:
    drifted = [f for f in fixed_fields if getattr(child, f) != getattr(parent, f)]
    if not drifted:
        return []
    if strict:
        return [f"field(s) {', '.join(drifted)} must be preserved verbatim"]
    logger.warning("provider paraphrased preserved field(s): %s", ", ".join(drifted))
    return []


def recombine(
    h1: CampHypothesis,
    h2: CampHypothesis,
    provider: Any,
    seed: int = 0,
    templates: TemplateStore | None = None,
) -> CampHypothesis:
    """Merge elements of two hypotheses into a new one, with per-field attribution."""
    ensure_valid(h1)
    ensure_valid(h2)
    if h1.id == h2.id:
        raise IdenticalParents(f"recombination needs two distinct parents, got {h1.id!r} twice")
    return _complete_child(
        "recombine",
        {"parent_a": serialize_hypothesis(h1), "parent_b": serialize_hypothesis(h2)},
        provider,
        seed,
        parents=(h1, h2),
        ttype=InnovationType.RECOMBINATION,
        templates=templates,
    )


def transform_mechanism(
    h: CampHypothesis,
    provider: Any,
    seed: int = 0,
    templates: TemplateStore | None = None,
) -> CampHypothesis:
    """Substitute the causal mechanism, keeping context, variables, and pattern."""
    ensure_valid(h)
    strict = _strict(provider)

    def postcheck(child: CampHypothesis) -> list[str]:
        problems = []
        if child.mechanism == h.mechanism:
            problems.append("mechanism is unchanged from the parent")
        problems.extend(
            _preservation_problems(child, h, ("context", "var_a", "var_b", "pattern"), strict)
        )
        return problems

    return _complete_child(
        "transform_mechanism",
        {"parent": serialize_hypothesis(h)},
        provider,
        seed,
        parents=(h,),
        ttype=InnovationType.MECHANISM_TRANSFORMATION,
        postcheck=postcheck,
        templates=templates,
    )


def transfer_context(
    h: CampHypothesis,
    target_context: str,
    provider: Any,
    seed: int = 0,
    templates: TemplateStore | None = None,
) -> CampHypothesis:
    """Migrate the hypothesis into a new setting, keeping A, B, and mechanism."""
    ensure_valid(h)
    if not target_context.strip():
        raise SameContext("target context must be non-empty")
    if target_context == h.context:
        raise SameContext("target context equals the source context")
    strict = _strict(provider)

    def postcheck(child: CampHypothesis) -> list[str]:
        problems = []
        if strict and child.context != target_context:
            problems.append("context must equal the requested target")
        problems.extend(_preservation_problems(child, h, ("var_a", "var_b", "mechanism"), strict))
        return problems

    return _complete_child(
        "transfer_context",
        {"parent": serialize_hypothesis(h), "target_context": target_context},
        provider,
        seed,
        parents=(h,),
        ttype=InnovationType.CONTEXT_TRANSFER,
        postcheck=postcheck,
        templates=templates,
    )


def generate_meta(
    hset: Sequence[CampHypothesis],
    provider: Any,
    seed: int = 0,
    templates: TemplateStore | None = None,
) -> CampHypothesis:
    """Form a higher-level question spanning a set of related hypotheses."""
    if len(hset) < 2:
        raise TooFewParents(f"meta-hypothesis needs at least 2 inputs, got {len(hset)}")
    ids = [h.id for h in hset]
    if len(set(ids)) != len(ids):
        raise IdenticalParents("meta-hypothesis inputs must have distinct ids")
    for h in hset:
        ensure_valid(h)
    return _complete_child(
        "generate_meta",
        {"parents": [serialize_hypothesis(h) for h in hset]},
        provider,
        seed,
        parents=tuple(hset),
        ttype=InnovationType.META_HYPOTHESIS,
        templates=templates,
    )
