"""Impact-factor calibration and training-corpus assembly for the critic.

Venue impact factors map hypotheses onto quality tiers; expert review
documents decompose into structured feedback labels.  Both become
line-delimited training records for downstream fine-tuning (which is out of
this engine's hands — we only assemble and export).
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from pydantic import BaseModel, ConfigDict, Field

from urbanlab.camp import CampHypothesis, TierRating, ensure_valid, hypothesis_document
from urbanlab.errors import InvalidThresholds

logger = logging.getLogger("urbanlab.critic")

DEFAULT_IMPACT_THRESHOLDS = (20.0, 10.0, 5.0)

LABEL_SET = ("strengths", "weaknesses", "major_concerns", "minor_concerns", "suggestions")

_LABEL_KEY_MAP = {
    "Strengths": "strengths",
    "Weaknesses": "weaknesses",
    "MajorConcerns": "major_concerns",
    "Major concerns": "major_concerns",
    "MinorConcerns": "minor_concerns",
    "Minor concerns": "minor_concerns",
    "Suggestions": "suggestions",
}


class CalibrationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    hypothesis_id: str
    impact_factor: float = Field(ge=0)
    tier_label: TierRating


def assign_tier_from_impact(
    impact_factor: float,
    thresholds: Sequence[float] = DEFAULT_IMPACT_THRESHOLDS,
) -> TierRating:
    """Band a non-negative venue impact factor into Tier1..Tier4 (never Reject)."""
    if len(thresholds) != 3:
        raise InvalidThresholds(f"need exactly 3 cut points, got {len(thresholds)}")
    t1, t2, t3 = (float(t) for t in thresholds)
    if not (t1 > t2 > t3 > 0):
        raise InvalidThresholds(f"cut points must be strictly descending and positive: {thresholds}")
    if impact_factor < 0:
        raise InvalidThresholds(f"impact factor must be non-negative, got {impact_factor}")
    if impact_factor >= t1:
        return TierRating.TIER1
    if impact_factor >= t2:
        return TierRating.TIER2
    if impact_factor >= t3:
        return TierRating.TIER3
    return TierRating.TIER4


# ---------------------------------------------------------------------------
# Review decomposition
# ---------------------------------------------------------------------------

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")

_CUES: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("major_concerns", ("major concern", "fatal", "invalidates", "cannot be accepted")),
    ("minor_concerns", ("minor concern", "typo", "cosmetic", "nitpick")),
    ("suggestions", ("suggest", "recommend", "should consider", "would benefit", "could add")),
    ("weaknesses", ("weakness", "however", "limited", "lacks", "fails to", "unclear", "overlooks")),
    ("strengths", ("strength", "strong", "novel", "well", "clear", "impressive", "important")),
)


def decompose_review(doc: Mapping[str, Any] | str) -> tuple[dict[str, list[str]], str]:
    """Split an expert review into the fixed label set; unmatched prose goes to summary."""
    labels: dict[str, list[str]] = {label: [] for label in LABEL_SET}
    summary_parts: list[str] = []

    if isinstance(doc, Mapping):
        matched_any = False
        for key, value in doc.items():
            label = _LABEL_KEY_MAP.get(str(key))
            if label is not None and isinstance(value, (list, tuple)):
                labels[label].extend(str(v) for v in value)
                matched_any = True
        summary = doc.get("Summary")
        if summary is not None:
            summary_parts.append(
                summary if isinstance(summary, str) else json.dumps(summary, ensure_ascii=False)
            )
        if matched_any:
            return labels, "\n".join(summary_parts)
        doc = json.dumps(doc, ensure_ascii=False)

    for sentence in _SENTENCE_SPLIT.split(str(doc)):
        sentence = sentence.strip()
        if not sentence:
            continue
        lowered = sentence.lower()
        for label, cues in _CUES:
            if any(cue in lowered for cue in cues):
                labels[label].append(sentence)
                break
        else:
            summary_parts.append(sentence)
    return labels, " ".join(summary_parts)


# ---------------------------------------------------------------------------
# Corpus assembly
# ---------------------------------------------------------------------------


def assemble_calibration_set(
    seed_hypotheses: Iterable[tuple[CampHypothesis, float]],
    reviews: Iterable[Mapping[str, Any] | str],
    out_path: str | Path,
    thresholds: Sequence[float] = DEFAULT_IMPACT_THRESHOLDS,
) -> dict[str, Any]:
    """Export the training corpus as line-delimited JSON records.

    Returns a summary with per-tier counts, record count, and skip count.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tier_counts: Counter[str] = Counter()
    skipped = 0
    records = 0

    with out_path.open("w", encoding="utf-8") as fh:
        for h, impact in seed_hypotheses:
            try:
                ensure_valid(h)
                tier = assign_tier_from_impact(float(impact), thresholds)
            except Exception as exc:
                logger.warning("skipping hypothesis %s: %s", getattr(h, "id", "?"), exc)
                skipped += 1
                continue
            record = {
                "kind": "hypothesis_tier",
                "subject": hypothesis_document(h),
                "label": tier.value,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            tier_counts[tier.value] += 1
            records += 1

        for doc in reviews:
            try:
                labels, summary = decompose_review(doc)
                subject: Any = doc if isinstance(doc, str) else dict(doc).get("Paper", dict(doc))
            except Exception as exc:
                logger.warning("skipping review document: %s", exc)
                skipped += 1
                continue
            record = {
                "kind": "review_labels",
                "subject": subject,
                "label": {**{k: v for k, v in labels.items()}, "summary": summary},
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            records += 1

    return {
        "path": str(out_path),
        "records": records,
        "skipped": skipped,
        "per_tier": dict(sorted(tier_counts.items())),
    }


def calibration_records(
    seed_hypotheses: Iterable[tuple[CampHypothesis, float]],
    thresholds: Sequence[float] = DEFAULT_IMPACT_THRESHOLDS,
) -> list[CalibrationRecord]:
    return [
        CalibrationRecord(
            hypothesis_id=h.id,
            impact_factor=float(impact),
            tier_label=assign_tier_from_impact(float(impact), thresholds),
        )
        for h, impact in seed_hypotheses
    ]
