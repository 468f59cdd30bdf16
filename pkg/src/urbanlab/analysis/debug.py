"""Bounded execute-classify-patch-rerun repair loop for analysis scripts.

Patches are whole-script replacements.  The loop stops on success, budget
exhaustion, or the provider declaring the script unpatchable.
"""

from __future__ import annotations

from typing import Any, Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field

from urbanlab.analysis.sandbox import (
    ErrorClass,
    ExecutionRecord,
    SandboxConfig,
    ScriptArtifact,
    classify_error,
    execute,
    script_artifact,
)
from urbanlab.errors import ProviderFailure
from urbanlab.provider import CompletionRequest, TemplateStore, complete

DEFAULT_MAX_ATTEMPTS = 5


class DebugAttempt(BaseModel):
    model_config = ConfigDict(frozen=True)

    record: ExecutionRecord
    diagnosis: ErrorClass | None = None
    patch_summary: str = ""


class DebugTrace(BaseModel):
    model_config = ConfigDict(frozen=True)

    attempts: tuple[DebugAttempt, ...]
    outcome: Literal["success", "exhausted", "unpatchable"]
    max_attempts: int = Field(ge=1)


def debug_loop(
    script: ScriptArtifact,
    sandbox: SandboxConfig,
    provider: Any,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    stage_files: Mapping[str, Any] | None = None,
    seed: int = 0,
    templates: TemplateStore | None = None,
) -> tuple[ExecutionRecord, DebugTrace]:
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    attempts: list[DebugAttempt] = []
    current = script
    record: ExecutionRecord | None = None

    try:
        for attempt in range(1, max_attempts + 1):
            record = execute(current, sandbox, stage_files=stage_files, attempt=attempt)
            if record.exit_status == 0 and not record.timed_out:
                attempts.append(DebugAttempt(record=record))
                return record, DebugTrace(
                    attempts=tuple(attempts), outcome="success", max_attempts=max_attempts
                )
            diagnosis = classify_error(record)
            if attempt == max_attempts:
                attempts.append(DebugAttempt(record=record, diagnosis=diagnosis))
                break
            try:
                response = complete(
                    CompletionRequest(
                        template_id="patch_script",
                        bindings={
                            "language": current.language_tag,
                            "body": current.body,
                            "stderr": record.stderr,
                            "diagnosis": diagnosis.value,
                        },
                        schema_id="patch_response",
                        seed=seed + attempt,
                    ),
                    provider,
                    templates,
                )
            except ProviderFailure:
                attempts.append(DebugAttempt(record=record, diagnosis=diagnosis))
                raise
            patch = response.parsed
            new_body = patch.get("Body")
            if patch["Action"] == "unpatchable" or not new_body:
                attempts.append(
                    DebugAttempt(
                        record=record,
                        diagnosis=diagnosis,
                        patch_summary=patch.get("Summary", "declared unpatchable"),
                    )
                )
                return record, DebugTrace(
                    attempts=tuple(attempts), outcome="unpatchable", max_attempts=max_attempts
                )
            attempts.append(
                DebugAttempt(
                    record=record,
                    diagnosis=diagnosis,
                    patch_summary=patch.get("Summary", "whole-script replacement"),
                )
            )
            current = script_artifact(
                body=new_body,
                language_tag=current.language_tag,
                inputs=current.inputs,
                outputs=current.outputs,
            )
    except ProviderFailure as exc:
        exc.partial_trace = DebugTrace(  # type: ignore[attr-defined]
            attempts=tuple(attempts), outcome="exhausted", max_attempts=max_attempts
        )
        raise

    assert record is not None
    return record, DebugTrace(
        attempts=tuple(attempts), outcome="exhausted", max_attempts=max_attempts
    )
