"""Shared exception taxonomy.

Every engine error carries a stable machine ``code`` (used verbatim by the
HTTP API error bodies and the CLI exit-code table) and a ``category`` that
groups errors by how callers should react.
"""

from __future__ import annotations

from enum import Enum
from typing import Any


class ErrorCategory(str, Enum):
    USAGE = "usage"
    VALIDATION = "validation"
    PROVIDER = "provider"
    EXECUTION = "execution"
    STATE = "state"


class UrbanLabError(Exception):
    """Base class for all engine errors."""

    code: str = "internal_error"
    category: ErrorCategory = ErrorCategory.EXECUTION

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = details


# -- document / validation -------------------------------------------------

class MalformedDocument(UrbanLabError):
    code = "malformed_document"
    category = ErrorCategory.VALIDATION


class SchemaViolation(UrbanLabError):
    code = "schema_violation"
    category = ErrorCategory.VALIDATION


class InvalidHypothesis(UrbanLabError):
    code = "invalid_hypothesis"
    category = ErrorCategory.VALIDATION


class AllWeightsZero(UrbanLabError):
    code = "all_weights_zero"
    category = ErrorCategory.USAGE


# -- provider ----------------------------------------------------------------

class ProviderFailure(UrbanLabError):
    code = "provider_failure"
    category = ErrorCategory.PROVIDER


class UnparseableOutput(ProviderFailure):
    """Backend output never satisfied the expected schema within the retry budget."""

    code = "unparseable_output"

    def __init__(self, message: str, attempts: list[str] | None = None, **details: Any) -> None:
        super().__init__(message, **details)
        self.attempts = attempts or []


class EmptyText(UrbanLabError):
    code = "empty_text"
    category = ErrorCategory.USAGE


# -- ideation ----------------------------------------------------------------

class InvalidChild(ProviderFailure):
    code = "invalid_child"


class SameContext(UrbanLabError):
    code = "same_context"
    category = ErrorCategory.USAGE


class TooFewParents(UrbanLabError):
    code = "too_few_parents"
    category = ErrorCategory.USAGE


class IdenticalParents(UrbanLabError):
    code = "identical_parents"
    category = ErrorCategory.USAGE


# -- data pool ---------------------------------------------------------------

class DimensionMismatch(UrbanLabError):
    code = "dimension_mismatch"
    category = ErrorCategory.USAGE


class DuplicateId(UrbanLabError):
    code = "duplicate_id"
    category = ErrorCategory.VALIDATION


class RestrictedSource(UrbanLabError):
    code = "restricted_source"
    category = ErrorCategory.USAGE


class FetchFailed(UrbanLabError):
    code = "fetch_failed"
    category = ErrorCategory.EXECUTION


class ByteCapExceeded(UrbanLabError):
    code = "byte_cap_exceeded"
    category = ErrorCategory.EXECUTION


class ParseError(UrbanLabError):
    code = "parse_error"
    category = ErrorCategory.VALIDATION


class UnknownColumn(UrbanLabError):
    code = "unknown_column"
    category = ErrorCategory.USAGE


class IncompatibleUnits(UrbanLabError):
    code = "incompatible_units"
    category = ErrorCategory.USAGE


class Unclassifiable(UrbanLabError):
    code = "unclassifiable"
    category = ErrorCategory.PROVIDER


# -- critic -------------------------------------------------------------------

class InvalidThresholds(UrbanLabError):
    code = "invalid_thresholds"
    category = ErrorCategory.USAGE


class UnparseableReview(UnparseableOutput):
    code = "unparseable_review"


# -- analysis -----------------------------------------------------------------

class EmptyPlan(ProviderFailure):
    code = "empty_plan"


class UnknownLanguageTag(UrbanLabError):
    code = "unknown_language_tag"
    category = ErrorCategory.USAGE


class SandboxSetupFailure(UrbanLabError):
    code = "sandbox_setup_failure"
    category = ErrorCategory.EXECUTION


class SimulatorFailure(UrbanLabError):
    code = "simulator_failure"
    category = ErrorCategory.EXECUTION


# -- orchestrator ---------------------------------------------------------------

class InvalidConfig(UrbanLabError):
    code = "invalid_config"
    category = ErrorCategory.USAGE


class StageFailure(UrbanLabError):
    code = "stage_failure"
    category = ErrorCategory.EXECUTION


class IllegalState(UrbanLabError):
    code = "illegal_state"
    category = ErrorCategory.STATE


class CorruptLog(UrbanLabError):
    code = "corrupt_log"
    category = ErrorCategory.STATE


class MissingArtifacts(UrbanLabError):
    code = "missing_artifacts"
    category = ErrorCategory.STATE


class UnknownRun(UrbanLabError):
    code = "unknown_run"
    category = ErrorCategory.STATE


class UnknownEntity(UrbanLabError):
    code = "unknown_entity"
    category = ErrorCategory.STATE
