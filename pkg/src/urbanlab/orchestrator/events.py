"""Pipeline stages, the event-sourced run state, and the log validator.

A run's entire dynamic state folds from its append-only event log; nothing is
tracked that could not be rebuilt by replaying events.
"""

from __future__ import annotations

from enum import Enum
from typing import Any, Literal, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from urbanlab.errors import CorruptLog

SCHEMA_VERSION = 1


class PipelineStage(str, Enum):
    IDEATION = "Ideation"
    CRITIQUE = "Critique"
    AWAITING_HUMAN_GATE = "AwaitingHumanGate"
    DATA_SEARCH = "DataSearch"
    ANALYSIS = "Analysis"
    WRITING = "Writing"
    DONE = "Done"
    FAILED = "Failed"


# Legal edges of the stage graph; Failed is reachable from every live stage.
STAGE_GRAPH: dict[PipelineStage, frozenset[PipelineStage]] = {
    PipelineStage.IDEATION: frozenset({PipelineStage.CRITIQUE, PipelineStage.FAILED}),
    PipelineStage.CRITIQUE: frozenset(
        {PipelineStage.AWAITING_HUMAN_GATE, PipelineStage.IDEATION, PipelineStage.FAILED}
    ),
    PipelineStage.AWAITING_HUMAN_GATE: frozenset(
        {PipelineStage.DATA_SEARCH, PipelineStage.FAILED}
    ),
    PipelineStage.DATA_SEARCH: frozenset({PipelineStage.ANALYSIS, PipelineStage.FAILED}),
    PipelineStage.ANALYSIS: frozenset({PipelineStage.WRITING, PipelineStage.FAILED}),
    PipelineStage.WRITING: frozenset({PipelineStage.DONE, PipelineStage.FAILED}),
    PipelineStage.DONE: frozenset(),
    PipelineStage.FAILED: frozenset(),
}

PRODUCTIVE_STAGES = (
    PipelineStage.IDEATION,
    PipelineStage.CRITIQUE,
    PipelineStage.DATA_SEARCH,
    PipelineStage.ANALYSIS,
    PipelineStage.WRITING,
)

TERMINAL_STAGES = (PipelineStage.DONE, PipelineStage.FAILED)


class EventKind(str, Enum):
    ENTERED = "entered"
    COMPLETED = "completed"
    FAILED = "failed"
    GATE_REQUESTED = "gate_requested"
    GATE_RESOLVED = "gate_resolved"


class StageEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    seq: int = Field(ge=0)
    ts: float
    stage: PipelineStage
    kind: EventKind
    payload: dict[str, Any] = Field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


class GateDecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    gate_id: str
    verdict: Literal["approve", "reject", "edit"]
    edited_hypothesis: dict[str, Any] | None = None
    actor: str = "human"
    timestamp: float = 0.0

    @model_validator(mode="after")
    def _check(self) -> "GateDecision":
        if self.verdict == "edit" and self.edited_hypothesis is None:
            raise ValueError("edit verdict requires an edited hypothesis")
        if self.verdict != "edit" and self.edited_hypothesis is not None:
            raise ValueError("only edit verdicts carry a hypothesis")
        return self


class RunState(BaseModel):
    """The fold of an event log: everything advance() needs to continue."""

    model_config = ConfigDict(frozen=True)

    stage: PipelineStage
    artifacts: dict[str, tuple[str, ...]] = Field(default_factory=dict)
    gate_decisions: tuple[GateDecision, ...] = ()
    hypothesis_digest: str | None = None
    review_digest: str | None = None
    last_tier: str | None = None
    ideation_rounds: int = 0
    failure_cause: str | None = None
    last_seq: int = -1
    last_ts: float = 0.0


class RunRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    run_id: str
    config: dict[str, Any]
    stage: PipelineStage
    events: tuple[StageEvent, ...]
    artifacts: dict[str, tuple[str, ...]]
    gate_decisions: tuple[GateDecision, ...]


def fold_events(events: Sequence[StageEvent]) -> RunState:
    """Replay an event log into a RunState, validating every transition.

    Raises :class:`CorruptLog` on sequence gaps, illegal stage edges, or
    events after a terminal stage.
    """
    stage: PipelineStage | None = None
    artifacts: dict[str, list[str]] = {}
    gates: list[GateDecision] = []
    hypothesis_digest: str | None = None
    review_digest: str | None = None
    last_tier: str | None = None
    ideation_rounds = 0
    failure_cause: str | None = None
    last_ts = 0.0

    for i, event in enumerate(events):
        if event.seq != i:
            raise CorruptLog(f"sequence gap: event #{i} has seq {event.seq}")
        if event.ts < last_ts:
            raise CorruptLog(f"timestamp regression at seq {event.seq}")
        last_ts = event.ts
        if stage in TERMINAL_STAGES:
            raise CorruptLog(f"event seq {event.seq} after terminal stage {stage}")

        if event.kind is EventKind.ENTERED:
            if stage is None:
                if event.stage is not PipelineStage.IDEATION:
                    raise CorruptLog(f"first event must enter Ideation, got {event.stage}")
            elif event.stage not in STAGE_GRAPH[stage]:
                raise CorruptLog(f"illegal transition {stage.value} -> {event.stage.value}")
            stage = event.stage
            if event.stage is PipelineStage.IDEATION:
                ideation_rounds += 1
        elif event.kind is EventKind.COMPLETED:
            if stage is not event.stage:
                raise CorruptLog(
                    f"completed({event.stage.value}) while in {stage and stage.value}"
                )
            ids = [str(a) for a in event.payload.get("artifacts", ())]
            artifacts.setdefault(event.stage.value, []).extend(ids)
            if "hypothesis_digest" in event.payload:
                hypothesis_digest = event.payload["hypothesis_digest"]
            if "review_digest" in event.payload:
                review_digest = event.payload["review_digest"]
            if "tier" in event.payload:
                last_tier = event.payload["tier"]
        elif event.kind is EventKind.FAILED:
            if stage is None:
                raise CorruptLog("failed event before any stage was entered")
            failure_cause = str(event.payload.get("cause", "unknown"))
            stage = PipelineStage.FAILED
        elif event.kind is EventKind.GATE_REQUESTED:
            if stage is not PipelineStage.AWAITING_HUMAN_GATE:
                raise CorruptLog("gate_requested outside AwaitingHumanGate")
        elif event.kind is EventKind.GATE_RESOLVED:
            if stage is not PipelineStage.AWAITING_HUMAN_GATE:
                raise CorruptLog("gate_resolved outside AwaitingHumanGate")
            gates.append(GateDecision(**event.payload["decision"]))
            if "hypothesis_digest" in event.payload:
                hypothesis_digest = event.payload["hypothesis_digest"]

    if stage is None:
        raise CorruptLog("empty event log")
    return RunState(
        stage=stage,
        artifacts={k: tuple(v) for k, v in artifacts.items()},
        gate_decisions=tuple(gates),
        hypothesis_digest=hypothesis_digest,
        review_digest=review_digest,
        last_tier=last_tier,
        ideation_rounds=ideation_rounds,
        failure_cause=failure_cause,
        last_seq=len(events) - 1,
        last_ts=last_ts,
    )


def validate_events(events: Sequence[StageEvent]) -> RunState:
    """Alias with intent: the log validator used by tests and resume()."""
    return fold_events(events)
