"""Tier-rated, rubric-structured review of hypotheses and paper bundles."""

from __future__ import annotations

import json
import math
from typing import Any, Mapping

from pydantic import BaseModel, ConfigDict, Field, model_validator

from urbanlab.camp import CampHypothesis, TierRating, canonical_json, serialize_hypothesis
from urbanlab.errors import (
    MalformedDocument,
    SchemaViolation,
    UnparseableOutput,
    UnparseableReview,
)
from urbanlab.provider import CompletionRequest, TemplateStore, complete


class ReviewReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    decision: TierRating
    rating: float = Field(ge=0, le=10)
    soundness: float = Field(ge=0, le=4)
    presentation: float = Field(ge=0, le=4)
    contribution: float = Field(ge=0, le=4)
    summary: str = ""
    strengths: tuple[str, ...] = ()
    weaknesses: tuple[str, ...] = ()
    suggestions: tuple[str, ...] = ()
    extras: dict[str, Any] = Field(default_factory=dict)


def validate_review(report: ReviewReport) -> list[str]:
    problems: list[str] = []
    if not report.weaknesses:
        problems.append("weaknesses must have at least one entry")
    if report.decision is not TierRating.REJECT:
        if not report.strengths:
            problems.append("strengths must be non-empty for a non-reject decision")
        if not report.suggestions:
            problems.append("suggestions must be non-empty for a non-reject decision")
    return problems


class RubricConfig(BaseModel):
    """Scoring weights, composite-to-tier bands, and the alignment preamble.

    ``bands`` maps composite floors to tiers, highest floor first; a composite
    below the lowest floor is a Reject.
    """

    model_config = ConfigDict(frozen=True)

    soundness_weight: float = Field(default=0.5, gt=0)
    presentation_weight: float = Field(default=0.2, gt=0)
    contribution_weight: float = Field(default=0.3, gt=0)
    bands: tuple[tuple[float, TierRating], ...] = (
        (3.5, TierRating.TIER1),
        (3.0, TierRating.TIER2),
        (2.0, TierRating.TIER3),
        (1.0, TierRating.TIER4),
    )
    system_preamble: str = (
        "You are a peer reviewer for a selective interdisciplinary venue. Weigh "
        "conceptual significance, interdisciplinary depth, empirical grounding, "
        "methodological rigor, and societal relevance."
    )

    @model_validator(mode="after")
    def _check(self) -> "RubricConfig":
        total = self.soundness_weight + self.presentation_weight + self.contribution_weight
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"dimension weights must sum to 1, got {total}")
        floors = [floor for floor, _ in self.bands]
        if not floors or any(b >= a for a, b in zip(floors, floors[1:])):
            raise ValueError("band floors must be strictly descending")
        tiers = [tier for _, tier in self.bands]
        if TierRating.REJECT in tiers:
            raise ValueError("Reject is what lies below the lowest band, not a band")
        return self


def composite_score(report: ReviewReport, rubric: RubricConfig) -> float:
    return (
        report.soundness * rubric.soundness_weight
        + report.presentation * rubric.presentation_weight
        + report.contribution * rubric.contribution_weight
    )


def tier_from_composite(composite: float, rubric: RubricConfig) -> TierRating:
    for floor, tier in rubric.bands:
        if composite >= floor:
            return tier
    return TierRating.REJECT


# ---------------------------------------------------------------------------
# Wire format (mirrors the published review-listing key names)
# ---------------------------------------------------------------------------

_DECISION_ALIASES = {
    "tier1": TierRating.TIER1,
    "tier2": TierRating.TIER2,
    "tier3": TierRating.TIER3,
    "tier4": TierRating.TIER4,
    "reject": TierRating.REJECT,
}

_SCORE_KEYS = ("Decision", "Rating", "Soundness", "Presentation", "Contribution")
_LIST_KEYS = ("Strengths", "Weaknesses", "Suggestions")


def parse_decision(value: str) -> TierRating:
    normalized = str(value).replace(" ", "").replace("-", "").lower()
    if normalized not in _DECISION_ALIASES:
        raise SchemaViolation(f"unknown Decision {value!r}")
    return _DECISION_ALIASES[normalized]


def _summary_text(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, Mapping):
        return "\n".join(f"{k}: {v}" for k, v in value.items())
    return str(value)


def review_from_document(
    doc: str | bytes | Mapping[str, Any],
    fallback_decision: TierRating | None = None,
) -> ReviewReport:
    """Build a :class:`ReviewReport` from the listing-shaped or flat document."""
    if isinstance(doc, (str, bytes)):
        try:
            data = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from exc
    else:
        data = dict(doc)
    if not isinstance(data, dict):
        raise MalformedDocument("review document root must be a JSON object")

    scores: Mapping[str, Any] = data
    if isinstance(data.get("Review"), Mapping):
        scores = data["Review"]

    missing = [k for k in ("Rating", "Soundness", "Presentation", "Contribution") if k not in scores]
    if missing:
        raise SchemaViolation(f"missing score key(s): {', '.join(missing)}", missing=missing)

    raw_decision = scores.get("Decision")
    if raw_decision is None:
        if fallback_decision is None:
            raise SchemaViolation("missing Decision and no fallback available")
        decision = fallback_decision
    else:
        decision = parse_decision(raw_decision)

    extras: dict[str, Any] = {}
    for key, value in data.items():
        if key in ("Review", *_SCORE_KEYS, *_LIST_KEYS):
            continue
        if key == "Summary":
            extras["Summary"] = value
        else:
            extras[key] = value

    try:
        return ReviewReport(
            decision=decision,
            rating=float(scores["Rating"]),
            soundness=float(scores["Soundness"]),
            presentation=float(scores["Presentation"]),
            contribution=float(scores["Contribution"]),
            summary=_summary_text(data.get("Summary")),
            strengths=tuple(str(s) for s in data.get("Strengths", ())),
            weaknesses=tuple(str(s) for s in data.get("Weaknesses", ())),
            suggestions=tuple(str(s) for s in data.get("Suggestions", ())),
            extras=extras,
        )
    except (TypeError, ValueError) as exc:
        raise SchemaViolation(f"bad review scores: {exc}") from exc


def parse_review(doc: str | bytes | Mapping[str, Any]) -> ReviewReport:
    report = review_from_document(doc)
    problems = validate_review(report)
    if problems:
        raise SchemaViolation("; ".join(problems))
    return report


def review_document(report: ReviewReport) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    if "Paper" in report.extras:
        doc["Paper"] = report.extras["Paper"]
    doc["Review"] = {
        "Decision": report.decision.value,
        "Rating": report.rating,
        "Soundness": report.soundness,
        "Presentation": report.presentation,
        "Contribution": report.contribution,
    }
    doc["Summary"] = report.extras.get("Summary", report.summary)
    doc["Strengths"] = list(report.strengths)
    doc["Weaknesses"] = list(report.weaknesses)
    doc["Suggestions"] = list(report.suggestions)
    for key in sorted(report.extras):
        if key not in ("Paper", "Summary"):
            doc[key] = report.extras[key]
    return doc


def serialize_review(report: ReviewReport) -> str:
    return canonical_json(review_document(report))


# ---------------------------------------------------------------------------
# Provider-backed critique
# ---------------------------------------------------------------------------


def _subject_text(subject: CampHypothesis | Mapping[str, Any]) -> str:
    if isinstance(subject, CampHypothesis):
        return serialize_hypothesis(subject)
    return canonical_json(dict(subject))


def critique(
    subject: CampHypothesis | Mapping[str, Any],
    provider: Any,
    rubric: RubricConfig | None = None,
    seed: int = 0,
    max_retries: int = 1,
    templates: TemplateStore | None = None,
) -> ReviewReport:
    """Obtain a validated tier-rated review of a hypothesis or paper bundle.

    The provider's explicit in-range decision wins; otherwise the decision is
    derived from the weighted composite via the rubric's bands.
    """
    rubric = rubric or RubricConfig()
    req = CompletionRequest(
        template_id="critique",
        bindings={"preamble": rubric.system_preamble, "subject": _subject_text(subject)},
        schema_id="review_document",
        seed=seed,
        max_retries=0,
    )
    attempts: list[str] = []
    last_problem = ""
    for _ in range(max_retries + 1):
        try:
            response = complete(req, provider, templates)
        except UnparseableOutput as exc:
            attempts.extend(exc.attempts)
            last_problem = str(exc)
            continue
        attempts.append(response.raw)
        data = dict(response.parsed)
        provisional = review_from_document(data, fallback_decision=TierRating.TIER4)
        explicit = data.get("Decision")
        if explicit is None and isinstance(data.get("Review"), Mapping):
            explicit = data["Review"].get("Decision")
        if explicit is None:
            composite = composite_score(provisional, rubric)
            provisional = provisional.model_copy(
                update={"decision": tier_from_composite(composite, rubric)}
            )
        problems = validate_review(provisional)
        if not problems:
            return provisional
        last_problem = "; ".join(problems)
    raise UnparseableReview(
        f"no well-formed review after {max_retries + 1} attempt(s): {last_problem}",
        attempts=attempts,
    )
