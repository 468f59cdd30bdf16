from urbanlab.analysis.debug import DEFAULT_MAX_ATTEMPTS, DebugAttempt, DebugTrace, debug_loop
from urbanlab.analysis.plan import (
    ExperimentPlan,
    PlanPhase,
    generate_script,
    parse_plan,
    plan_document,
    plan_experiment,
    serialize_plan,
)
from urbanlab.analysis.sandbox import (
    ErrorClass,
    ExecutionRecord,
    FileDigest,
    SandboxConfig,
    ScriptArtifact,
    classify_error,
    execute,
    script_artifact,
)
from urbanlab.analysis.simulator import (
    ParamSpec,
    SimulatorAdapter,
    run_simulation,
    toy_diffusion_adapter,
    validate_params,
)
from urbanlab.analysis.snippets import (
    CodeSnippet,
    RankedSnippet,
    SnippetPool,
    retrieve_snippets,
    snippet_embedding_text,
)

__all__ = [
    "CodeSnippet",
    "DEFAULT_MAX_ATTEMPTS",
    "DebugAttempt",
    "DebugTrace",
    "ErrorClass",
    "ExecutionRecord",
    "ExperimentPlan",
    "FileDigest",
    "ParamSpec",
    "PlanPhase",
    "RankedSnippet",
    "SandboxConfig",
    "ScriptArtifact",
    "SimulatorAdapter",
    "SnippetPool",
    "classify_error",
    "debug_loop",
    "execute",
    "generate_script",
    "parse_plan",
    "plan_document",
    "plan_experiment",
    "retrieve_snippets",
    "run_simulation",
    "script_artifact",
    "serialize_plan",
    "snippet_embedding_text",
    "toy_diffusion_adapter",
    "validate_params",
]
