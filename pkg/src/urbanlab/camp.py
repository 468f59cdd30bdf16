"""Structured hypothesis model: validation, canonical wire format, embedding text.

A hypothesis decomposes into five testable components — the setting it lives
in (context), an independent and a dependent variable, the causal mechanism
linking them, and the observable pattern it predicts.  Every other part of
the engine consumes these types.
"""

from __future__ import annotations

import hashlib
import json
from enum import Enum
from typing import Any, Mapping

from pydantic import BaseModel, ConfigDict, Field

from urbanlab.errors import (
    AllWeightsZero,
    InvalidHypothesis,
    MalformedDocument,
    SchemaViolation,
)


class InnovationType(str, Enum):
    """How a derived hypothesis was produced from its parents."""

    RECOMBINATION = "Recombination"
    MECHANISM_TRANSFORMATION = "MechanismTransformation"
    CONTEXT_TRANSFER = "ContextTransfer"
    META_HYPOTHESIS = "MetaHypothesis"


_TIER_RANK = {"Tier1": 4, "Tier2": 3, "Tier3": 2, "Tier4": 1, "Reject": 0}


class TierRating(str, Enum):
    """Critic quality decision; Tier1 is best, Reject is below every tier."""

    TIER1 = "Tier1"
    TIER2 = "Tier2"
    TIER3 = "Tier3"
    TIER4 = "Tier4"
    REJECT = "Reject"

    @property
    def rank(self) -> int:
        return _TIER_RANK[self.value]

    def __lt__(self, other: object) -> bool:  # type: ignore[override]
        if not isinstance(other, TierRating):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other: object) -> bool:  # type: ignore[override]
        if not isinstance(other, TierRating):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other: object) -> bool:  # type: ignore[override]
        if not isinstance(other, TierRating):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other: object) -> bool:  # type: ignore[override]
        if not isinstance(other, TierRating):
            return NotImplemented
        return self.rank >= other.rank


class HypothesisStatus(str, Enum):
    DRAFT = "draft"
    UNDER_REVIEW = "under_review"
    REFINED = "refined"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class Lineage(BaseModel):
    """Ancestry of a hypothesis: which ids it was derived from and how."""

    model_config = ConfigDict(frozen=True)

    parents: tuple[str, ...] = ()
    transformation: InnovationType | None = None
    generation: int = Field(default=0, ge=0)


class CampHypothesis(BaseModel):
    """One research hypothesis in the five-component decomposition.

    Instances are immutable; derive modified copies via ``model_copy``.
    Construction does not enforce the domain invariants — use
    :func:`validate_hypothesis` so callers get a full violation report
    instead of the first failure.
    """

    model_config = ConfigDict(frozen=True)

    id: str = ""
    title: str = ""
    abstract: str = ""
    context: str = ""
    var_a: str = ""
    var_b: str = ""
    mechanism: str = ""
    pattern: str = ""
    innovation_type: InnovationType | None = None
    innovation_rationale: str | None = None
    why_it_matters: str | None = None
    lineage: Lineage = Field(default_factory=Lineage)
    tier: TierRating | None = None
    status: HypothesisStatus = HypothesisStatus.DRAFT
    extras: dict[str, Any] = Field(default_factory=dict)


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    field_path: str
    message: str


ValidationReport = list[Violation]


def validate_hypothesis(h: CampHypothesis) -> ValidationReport:
    """Report every violated invariant; an empty report means valid."""
    report: list[Violation] = []
    for path in ("context", "var_a", "var_b", "mechanism", "pattern"):
        if not getattr(h, path).strip():
            report.append(Violation(field_path=path, message="must be non-empty"))
    if not h.id.strip():
        report.append(Violation(field_path="id", message="must be non-empty"))
    if h.innovation_type is not None and not h.lineage.parents:
        report.append(
            Violation(
                field_path="lineage.parents",
                message="innovation_type set but no parent hypotheses recorded",
            )
        )
    if (h.lineage.generation == 0) != (len(h.lineage.parents) == 0):
        report.append(
            Violation(
                field_path="lineage.generation",
                message="generation must be 0 exactly when parents is empty",
            )
        )
    return report


def is_valid(h: CampHypothesis) -> bool:
    return not validate_hypothesis(h)


def ensure_valid(h: CampHypothesis) -> CampHypothesis:
    report = validate_hypothesis(h)
    if report:
        raise InvalidHypothesis(
            "; ".join(f"{v.field_path}: {v.message}" for v in report),
            violations=[v.model_dump() for v in report],
        )
    return h


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------

# Key order of the canonical document.  The first block is the published
# hypothesis-document schema; the second block carries engine bookkeeping.
REQUIRED_KEYS = ("Context", "A", "B", "Mechanism", "Pattern")

# placeholder parent id for literature-derived innovated hypotheses
UNATTRIBUTED_PARENT = "unattributed"
OPTIONAL_KEYS = ("InnovationType", "Innovation rationale", "WhyItMatters", "Title", "Abstract")
ENGINE_KEYS = ("Id", "Status", "Tier", "Lineage")

_KEY_TO_FIELD = {
    "Context": "context",
    "A": "var_a",
    "B": "var_b",
    "Mechanism": "mechanism",
    "Pattern": "pattern",
    "Innovation rationale": "innovation_rationale",
    "WhyItMatters": "why_it_matters",
    "Title": "title",
    "Abstract": "abstract",
}


def canonical_json(doc: Mapping[str, Any]) -> str:
    """2-space-indented UTF-8 JSON with the mapping's own key order."""
    return json.dumps(doc, ensure_ascii=False, indent=2)


def content_id(doc: Mapping[str, Any]) -> str:
    """Deterministic id for a hypothesis document that lacks one."""
    basis = json.dumps(doc, ensure_ascii=False, sort_keys=True)
    return "h-" + hashlib.sha256(basis.encode("utf-8")).hexdigest()[:12]


def parse_hypothesis(doc: str | bytes | Mapping[str, Any]) -> CampHypothesis:
    """Parse a hypothesis document into a validated :class:`CampHypothesis`.

    Accepts the flat document shape and the two-object literature shape
    (``{"New CAMP": {...}, "New Idea": {...}}``); unknown keys are preserved
    in ``extras``.
    """
    return _build_hypothesis(doc, require_keys=True, validate=True)


def build_hypothesis(doc: str | bytes | Mapping[str, Any]) -> CampHypothesis:
    """Like :func:`parse_hypothesis`, but tolerates missing keys and does not
    validate — for callers that want the full violation report."""
    return _build_hypothesis(doc, require_keys=False, validate=False)


def _build_hypothesis(
    doc: str | bytes | Mapping[str, Any], require_keys: bool, validate: bool
) -> CampHypothesis:
    if isinstance(doc, (str, bytes)):
        try:
            data = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from exc
    else:
        data = dict(doc)
    if not isinstance(data, dict):
        raise MalformedDocument("document root must be a JSON object")

    if "New CAMP" in data or "New Idea" in data:
        merged: dict[str, Any] = {}
        camp_part = data.get("New CAMP", {})
        idea_part = data.get("New Idea", {})
        if not isinstance(camp_part, dict) or not isinstance(idea_part, dict):
            raise MalformedDocument("'New CAMP' and 'New Idea' must be objects")
        merged.update(camp_part)
        merged.update(idea_part)
        for key, value in data.items():
            if key not in ("New CAMP", "New Idea"):
                merged[key] = value
        data = merged

    missing = [k for k in REQUIRED_KEYS if k not in data]
    if require_keys and missing:
        raise SchemaViolation(
            f"missing required key(s): {', '.join(missing)}", missing=missing
        )

    fields: dict[str, Any] = {}
    extras: dict[str, Any] = {}
    for key, value in data.items():
        if key in _KEY_TO_FIELD:
            fields[_KEY_TO_FIELD[key]] = "" if value is None else str(value)
        elif key == "InnovationType":
            if value is not None:
                try:
                    fields["innovation_type"] = InnovationType(value)
                except ValueError as exc:
                    raise SchemaViolation(f"unknown InnovationType {value!r}") from exc
        elif key == "Id":
            fields["id"] = str(value)
        elif key == "Status":
            try:
                fields["status"] = HypothesisStatus(value)
            except ValueError as exc:
                raise SchemaViolation(f"unknown Status {value!r}") from exc
        elif key == "Tier":
            if value is not None:
                try:
                    fields["tier"] = TierRating(value)
                except ValueError as exc:
                    raise SchemaViolation(f"unknown Tier {value!r}") from exc
        elif key == "Lineage":
            if not isinstance(value, dict):
                raise SchemaViolation("Lineage must be an object")
            try:
                fields["lineage"] = Lineage(
                    parents=tuple(value.get("Parents", ())),
                    transformation=(
                        InnovationType(value["Transformation"])
                        if value.get("Transformation") is not None
                        else None
                    ),
                    generation=int(value.get("Generation", 0)),
                )
            except (ValueError, TypeError) as exc:
                raise SchemaViolation(f"bad Lineage: {exc}") from exc
        else:
            extras[key] = value

    if "id" not in fields or not str(fields.get("id", "")).strip():
        fields["id"] = content_id(data)

    # Literature-derived documents may declare how they were innovated without
    # carrying machine lineage; give them a placeholder parent so the
    # innovation/lineage invariant holds.
    if fields.get("innovation_type") is not None and "lineage" not in fields:
        fields["lineage"] = Lineage(
            parents=(UNATTRIBUTED_PARENT,),
            transformation=fields["innovation_type"],
            generation=1,
        )

    h = CampHypothesis(**fields, extras=extras)
    return ensure_valid(h) if validate else h


def hypothesis_document(h: CampHypothesis) -> dict[str, Any]:
    """Canonical document mapping (fixed key order) for a hypothesis."""
    doc: dict[str, Any] = {}
    doc["Context"] = h.context
    doc["A"] = h.var_a
    doc["B"] = h.var_b
    doc["Mechanism"] = h.mechanism
    doc["Pattern"] = h.pattern
    if h.innovation_type is not None:
        doc["InnovationType"] = h.innovation_type.value
    if h.innovation_rationale is not None:
        doc["Innovation rationale"] = h.innovation_rationale
    if h.why_it_matters is not None:
        doc["WhyItMatters"] = h.why_it_matters
    if h.title:
        doc["Title"] = h.title
    if h.abstract:
        doc["Abstract"] = h.abstract
    doc["Id"] = h.id
    doc["Status"] = h.status.value
    if h.tier is not None:
        doc["Tier"] = h.tier.value
    doc["Lineage"] = {
        "Parents": list(h.lineage.parents),
        "Transformation": (
            h.lineage.transformation.value if h.lineage.transformation else None
        ),
        "Generation": h.lineage.generation,
    }
    for key in sorted(h.extras):
        doc[key] = h.extras[key]
    return doc


def serialize_hypothesis(h: CampHypothesis) -> str:
    """Canonical text form; byte-identical for equal hypotheses."""
    ensure_valid(h)
    return canonical_json(hypothesis_document(h))


# ---------------------------------------------------------------------------
# Embedding text
# ---------------------------------------------------------------------------

CAMP_FIELDS = ("context", "var_a", "var_b", "mechanism", "pattern")

DEFAULT_WEIGHTS: dict[str, int] = {f: 1 for f in CAMP_FIELDS}


def camp_text(h: CampHypothesis, weights: Mapping[str, int] | None = None) -> str:
    """Flatten a hypothesis into labelled text segments for embedding.

    Each component contributes ``label: value`` repeated ``weights[label]``
    times; segments are newline-delimited in fixed field order so equal
    inputs flatten to byte-identical text.
    """
    w = dict(DEFAULT_WEIGHTS)
    if weights is not None:
        for key, count in weights.items():
            if key not in w:
                raise AllWeightsZero(f"unknown weight key {key!r}")
            if count < 0:
                raise AllWeightsZero(f"weight for {key!r} must be non-negative")
            w[key] = int(count)
    if all(count == 0 for count in w.values()):
        raise AllWeightsZero("at least one field weight must be positive")
    segments: list[str] = []
    for field in CAMP_FIELDS:
        segment = f"{field}: {getattr(h, field)}"
        segments.extend([segment] * w[field])
    return "\n".join(segments)
