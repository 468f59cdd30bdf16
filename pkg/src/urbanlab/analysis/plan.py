"""Retrieval-guided experiment planning and the phased plan wire format."""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from urbanlab.analysis.sandbox import ScriptArtifact, script_artifact
from urbanlab.analysis.snippets import CodeSnippet, SnippetPool, retrieve_snippets
from urbanlab.camp import CampHypothesis, camp_text, canonical_json, ensure_valid, serialize_hypothesis
from urbanlab.datapool.cards import DataCard, card_document
from urbanlab.errors import EmptyPlan, MalformedDocument, ProviderFailure, SchemaViolation
from urbanlab.provider import CompletionRequest, EmbeddingBackend, TemplateStore, complete

PLAN_REPROMPT_BUDGET = 3
SNIPPETS_PER_PHASE = 3


class PlanPhase(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    tasks: tuple[str, ...]

    @model_validator(mode="after")
    def _check(self) -> "PlanPhase":
        if not self.name.strip():
            raise ValueError("phase name must be non-empty")
        if not self.tasks:
            raise ValueError(f"phase {self.name!r} needs at least one task")
        return self


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    hypothesis_id: str = ""
    dataset_ids: tuple[str, ...] = ()
    phases: tuple[PlanPhase, ...]
    retrieved_snippets: dict[str, tuple[str, ...]] = Field(default_factory=dict)
    simulate: bool = False
    extras: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self) -> "ExperimentPlan":
        if not self.phases:
            raise ValueError("a plan needs at least one phase")
        names = [p.name for p in self.phases]
        if len(set(names)) != len(names):
            raise ValueError("phase names must be unique")
        return self


def plan_document(plan: ExperimentPlan) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    if "Paper" in plan.extras:
        doc["Paper"] = plan.extras["Paper"]
    doc["AnalyzingAgentPlan"] = {
        phase.name: {"tasks": list(phase.tasks)} for phase in plan.phases
    }
    if plan.hypothesis_id:
        doc["HypothesisId"] = plan.hypothesis_id
    if plan.dataset_ids:
        doc["DatasetIds"] = list(plan.dataset_ids)
    if plan.retrieved_snippets:
        doc["RetrievedSnippets"] = {
            name: list(ids) for name, ids in plan.retrieved_snippets.items()
        }
    if plan.simulate:
        doc["Simulate"] = True
    for key in sorted(plan.extras):
        if key != "Paper":
            doc[key] = plan.extras[key]
    return doc


def serialize_plan(plan: ExperimentPlan) -> str:
    return canonical_json(plan_document(plan))


def parse_plan(doc: str | bytes | Mapping[str, Any]) -> ExperimentPlan:
    if isinstance(doc, (str, bytes)):
        try:
            data = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from exc
    else:
        data = dict(doc)
    if not isinstance(data, dict):
        raise MalformedDocument("plan document root must be a JSON object")
    body = data.get("AnalyzingAgentPlan")
    if not isinstance(body, dict) or not body:
        raise SchemaViolation("document must contain a non-empty 'AnalyzingAgentPlan' object")

    phases: list[PlanPhase] = []
    for name, phase in body.items():
        if not isinstance(phase, dict) or "tasks" not in phase:
            raise SchemaViolation(f"phase {name!r} must be an object with a 'tasks' array")
        try:
            phases.append(PlanPhase(name=name, tasks=tuple(str(t) for t in phase["tasks"])))
        except ValueError as exc:
            raise SchemaViolation(str(exc)) from exc

    extras = {
        k: v
        for k, v in data.items()
        if k
        not in ("AnalyzingAgentPlan", "HypothesisId", "DatasetIds", "RetrievedSnippets", "Simulate")
    }
    retrieved = {
        str(name): tuple(str(s) for s in ids)
        for name, ids in dict(data.get("RetrievedSnippets", {})).items()
    }
    try:
        return ExperimentPlan(
            hypothesis_id=str(data.get("HypothesisId", "")),
            dataset_ids=tuple(str(d) for d in data.get("DatasetIds", ())),
            phases=tuple(phases),
            retrieved_snippets=retrieved,
            simulate=bool(data.get("Simulate", False)),
            extras=extras,
        )
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from exc


def plan_experiment(
    h: CampHypothesis,
    cards: Sequence[DataCard],
    codebase: SnippetPool,
    provider: Any,
    embedder: EmbeddingBackend,
    seed: int = 0,
    templates: TemplateStore | None = None,
) -> ExperimentPlan:
    """Draft a phased plan for testing ``h`` against ``cards``.

    Snippet retrieval guides the planner prompt, and every parsed phase is
    annotated with its own top supporting snippets.
    """
    ensure_valid(h)
    if not cards:
        raise SchemaViolation("plan_experiment needs at least one matched data card")

    overview_query = camp_text(h) + "\n" + "\n".join(c.name for c in cards)
    overview = (
        retrieve_snippets(codebase, overview_query, 5, embedder) if len(codebase) else []
    )
    snippet_briefs = [
        {
            "Id": r.snippet_id,
            "Tags": list(codebase.snippet(r.snippet_id).task_tags),
            "Head": codebase.snippet(r.snippet_id).body[:200],
        }
        for r in overview
    ]
    req = CompletionRequest(
        template_id="plan_experiment",
        bindings={
            "hypothesis": serialize_hypothesis(h),
            "cards": [card_document(c) for c in cards],
            "snippets": snippet_briefs,
        },
        schema_id="experiment_plan",
        seed=seed,
    )

    last_error: Exception | None = None
    for _ in range(PLAN_REPROMPT_BUDGET):
        response = complete(req, provider, templates)
        try:
            parsed = parse_plan(response.parsed)
        except (SchemaViolation, MalformedDocument) as exc:
            last_error = exc
            continue
        retrieved: dict[str, tuple[str, ...]] = {}
        if len(codebase):
            for phase in parsed.phases:
                phase_query = phase.name + "\n" + "\n".join(phase.tasks)
                ranked = retrieve_snippets(codebase, phase_query, SNIPPETS_PER_PHASE, embedder)
                retrieved[phase.name] = tuple(r.snippet_id for r in ranked)
        return parsed.model_copy(
            update={
                "hypothesis_id": h.id,
                "dataset_ids": tuple(c.id for c in cards),
                "retrieved_snippets": retrieved,
            }
        )
    raise EmptyPlan(
        f"provider never produced a usable plan after {PLAN_REPROMPT_BUDGET} attempt(s): {last_error}"
    )


def generate_script(
    phase: PlanPhase,
    snippets: Sequence[CodeSnippet],
    language_tag: str,
    provider: Any,
    available_inputs: Sequence[str] = (),
    seed: int = 0,
    templates: TemplateStore | None = None,
) -> ScriptArtifact:
    """Produce one executable script for a plan phase.

    Snippets are guidance, not a requirement; the declared inputs must be a
    subset of the available dataset paths.
    """
    req = CompletionRequest(
        template_id="generate_script",
        bindings={
            "phase_name": phase.name,
            "tasks": list(phase.tasks),
            "language": language_tag,
            "inputs": list(available_inputs),
            "snippets": [
                {"Id": s.id, "Tags": list(s.task_tags), "Head": s.body[:200]} for s in snippets
            ],
        },
        schema_id="script_artifact",
        seed=seed,
    )
    last_problem = ""
    for _ in range(PLAN_REPROMPT_BUDGET):
        response = complete(req, provider, templates)
        declared = tuple(str(p) for p in response.parsed.get("Inputs", ()))
        stray = set(declared) - set(available_inputs)
        if stray:
            last_problem = f"declared input(s) not available: {', '.join(sorted(stray))}"
            continue
        return script_artifact(
            body=response.parsed["Body"],
            language_tag=language_tag,
            inputs=declared,
            outputs=tuple(str(p) for p in response.parsed.get("Outputs", ())),
        )
    raise ProviderFailure(
        f"no usable script for phase {phase.name!r} after {PLAN_REPROMPT_BUDGET} attempt(s): {last_problem}"
    )
