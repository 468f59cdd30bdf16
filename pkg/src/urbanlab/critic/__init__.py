from urbanlab.critic.calibration import (
    DEFAULT_IMPACT_THRESHOLDS,
    CalibrationRecord,
    assemble_calibration_set,
    assign_tier_from_impact,
    calibration_records,
    decompose_review,
)
from urbanlab.critic.review import (
    ReviewReport,
    RubricConfig,
    composite_score,
    critique,
    parse_review,
    review_document,
    serialize_review,
    tier_from_composite,
    validate_review,
)

__all__ = [
    "CalibrationRecord",
    "DEFAULT_IMPACT_THRESHOLDS",
    "ReviewReport",
    "RubricConfig",
    "assemble_calibration_set",
    "assign_tier_from_impact",
    "calibration_records",
    "composite_score",
    "critique",
    "decompose_review",
    "parse_review",
    "review_document",
    "serialize_review",
    "tier_from_composite",
    "validate_review",
]
