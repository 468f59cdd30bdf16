"""Iterative hypothesis refinement: virtual-scientist panel plus critic loop.

Each iteration runs a strict round-robin debate over the configured personas,
synthesizes a revised hypothesis from the transcript, and has the critic rate
it.  The loop stops when the target tier is reached or the iteration budget
is spent; the trace keeps every intermediate snapshot.
"""

from __future__ import annotations

from typing import Any, Callable

from pydantic import BaseModel, ConfigDict, Field, model_validator

from urbanlab.camp import (
    CampHypothesis,
    HypothesisStatus,
    TierRating,
    content_id,
    ensure_valid,
    hypothesis_document,
    parse_hypothesis,
    serialize_hypothesis,
)
from urbanlab.critic.review import ReviewReport
from urbanlab.errors import InvalidChild, ProviderFailure
from urbanlab.provider import CompletionRequest, TemplateStore, complete

CriticFn = Callable[[CampHypothesis], ReviewReport]


class Persona(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    discipline: str
    stance: str


class PanelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    personas: tuple[Persona, ...]
    rounds: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "PanelConfig":
        if len(self.personas) < 2:
            raise ValueError("a debate panel needs at least 2 personas")
        return self


DEFAULT_PANEL = PanelConfig(
    personas=(
        Persona(
            name="Dr. Reyes",
            discipline="urban economics",
            stance="Press on identification strategy and measurable variables.",
        ),
        Persona(
            name="Dr. Okafor",
            discipline="urban geography",
            stance="Press on spatial scale, context validity, and data coverage.",
        ),
        Persona(
            name="Dr. Lindqvist",
            discipline="public health",
            stance="Press on mechanism plausibility and confounding pathways.",
        ),
    ),
    rounds=1,
)


class RefinementConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(default=3, ge=1)
    target_tier: TierRating = TierRating.TIER2
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "RefinementConfig":
        if self.target_tier is TierRating.REJECT:
            raise ValueError("target tier cannot be Reject")
        return self


class RefinementStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    hypothesis: CampHypothesis
    transcript: tuple[str, ...]
    review: ReviewReport


class RefinementTrace(BaseModel):
    model_config = ConfigDict(frozen=True)

    steps: tuple[RefinementStep, ...]
    final: CampHypothesis
    converged: bool


def _best_snapshot(steps: tuple[RefinementStep, ...], fallback: CampHypothesis) -> CampHypothesis:
    if not steps:
        return fallback
    # ties break toward the latest step: later revisions absorbed more feedback
    best = max(enumerate(steps), key=lambda pair: (pair[1].review.decision.rank, pair[0]))
    return best[1].hypothesis


def run_panel(
    current: CampHypothesis,
    panel: PanelConfig,
    provider: Any,
    seed: int,
    templates: TemplateStore | None = None,
) -> list[str]:
    """One full debate: every persona speaks once per round, in declaration order."""
    transcript: list[str] = []
    turn = 0
    for round_no in range(1, panel.rounds + 1):
        for persona in panel.personas:
            req = CompletionRequest(
                template_id="persona_turn",
                bindings={
                    "persona_name": persona.name,
                    "discipline": persona.discipline,
                    "stance": persona.stance,
                    "hypothesis": serialize_hypothesis(current),
                    "round": round_no,
                },
                seed=seed + turn,
            )
            transcript.append(complete(req, provider, templates).parsed)
            turn += 1
    return transcript


def synthesize_revision(
    current: CampHypothesis,
    transcript: list[str],
    iteration: int,
    provider: Any,
    seed: int,
    templates: TemplateStore | None = None,
) -> CampHypothesis:
    req = CompletionRequest(
        template_id="synthesize_revision",
        bindings={
            "hypothesis": serialize_hypothesis(current),
            "transcript": "\n".join(transcript),
            "iteration": iteration,
        },
        schema_id="hypothesis_document",
        seed=seed,
    )
    response = complete(req, provider, templates)
    doc = dict(response.parsed)
    # a revision keeps the original ancestry; only content evolves
    base = hypothesis_document(current)
    for key in ("InnovationType", "Innovation rationale", "WhyItMatters", "Lineage"):
        if key in base:
            doc[key] = base[key]
    doc["Status"] = HypothesisStatus.REFINED.value
    doc.pop("Id", None)
    doc.pop("Tier", None)
    doc["Id"] = content_id(doc)
    try:
        return parse_hypothesis(doc)
    except Exception as exc:
        raise InvalidChild(f"revision failed validation: {exc}") from exc


def refine_loop(
    h: CampHypothesis,
    panel: PanelConfig,
    critic_fn: CriticFn,
    provider: Any,
    cfg: RefinementConfig,
    templates: TemplateStore | None = None,
) -> RefinementTrace:
    """Debate, revise, and re-rate ``h`` until the target tier or the budget."""
    ensure_valid(h)
    current = h
    steps: list[RefinementStep] = []
    try:
        for iteration in range(1, cfg.max_iterations + 1):
            transcript = run_panel(
                current, panel, provider, cfg.seed + iteration * 1000, templates
            )
            revised = synthesize_revision(
                current, transcript, iteration, provider, cfg.seed + iteration * 1000 + 999, templates
            )
            review = critic_fn(revised)
            snapshot = revised.model_copy(update={"tier": review.decision})
            steps.append(
                RefinementStep(hypothesis=snapshot, transcript=tuple(transcript), review=review)
            )
            current = snapshot
            if review.decision >= cfg.target_tier:
                break
    except ProviderFailure as exc:
        partial = tuple(steps)
        exc.partial_trace = RefinementTrace(  # type: ignore[attr-defined]
            steps=partial,
            final=_best_snapshot(partial, h),
            converged=False,
        )
        raise

    final = _best_snapshot(tuple(steps), h)
    converged = final.tier is not None and final.tier >= cfg.target_tier
    return RefinementTrace(steps=tuple(steps), final=final, converged=converged)
