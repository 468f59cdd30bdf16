from urbanlab.orchestrator.engine import Orchestrator
from urbanlab.orchestrator.events import (
    EventKind,
    GateDecision,
    PipelineStage,
    RunRecord,
    RunState,
    STAGE_GRAPH,
    StageEvent,
    fold_events,
    validate_events,
)
from urbanlab.orchestrator.report import draft_report
from urbanlab.orchestrator.store import HypothesisStore, RunStore

__all__ = [
    "EventKind",
    "GateDecision",
    "HypothesisStore",
    "Orchestrator",
    "PipelineStage",
    "RunRecord",
    "RunState",
    "RunStore",
    "STAGE_GRAPH",
    "StageEvent",
    "draft_report",
    "fold_events",
    "validate_events",
]
