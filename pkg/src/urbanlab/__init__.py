"""urbanlab: an urban research workflow engine.

Structured hypothesis ideation and mutation, data-card indexing with semantic
matching, tier-rated critique, retrieval-guided sandboxed analysis with
automatic repair, and an end-to-end human-gated research pipeline.
"""

from urbanlab.camp import (
    CampHypothesis,
    HypothesisStatus,
    InnovationType,
    Lineage,
    TierRating,
    camp_text,
    parse_hypothesis,
    serialize_hypothesis,
    validate_hypothesis,
)

__version__ = "0.1.0"

__all__ = [
    "CampHypothesis",
    "HypothesisStatus",
    "InnovationType",
    "Lineage",
    "TierRating",
    "__version__",
    "camp_text",
    "parse_hypothesis",
    "serialize_hypothesis",
    "validate_hypothesis",
]
