"""Template-based report drafting from a completed run's artifacts.

The document is a pure function of the run's stored artifacts: hypothesis,
matched data cards, plan phases, execution outcomes, and critic weaknesses.
No timestamps or machine-local paths appear, so equal runs draft equal bytes.
"""

from __future__ import annotations

from typing import Any

from urbanlab.errors import MissingArtifacts
from urbanlab.orchestrator.events import EventKind, PipelineStage, RunRecord
from urbanlab.orchestrator.store import RunStore


def _last_completed_payload(record: RunRecord, stage: PipelineStage) -> dict[str, Any] | None:
    for event in reversed(record.events):
        if event.kind is EventKind.COMPLETED and event.stage is stage:
            return event.payload
    return None


def _stdout_excerpt(text: str, max_lines: int = 6, max_chars: int = 600) -> str:
    lines = text.strip().splitlines()[:max_lines]
    excerpt = "\n".join(lines)
    if len(excerpt) > max_chars:
        excerpt = excerpt[:max_chars] + "..."
    return excerpt


def draft_report(record: RunRecord, store: RunStore) -> str:
    """Render the run's findings as markdown; requires a completed Analysis stage."""
    analysis = _last_completed_payload(record, PipelineStage.ANALYSIS)
    if analysis is None:
        raise MissingArtifacts(f"run {record.run_id} has no completed Analysis stage")
    ideation = _last_completed_payload(record, PipelineStage.IDEATION)
    critique = _last_completed_payload(record, PipelineStage.CRITIQUE)
    search = _last_completed_payload(record, PipelineStage.DATA_SEARCH)

    h_digest = None
    for event in reversed(record.events):
        if event.kind is EventKind.GATE_RESOLVED and "hypothesis_digest" in event.payload:
            h_digest = event.payload["hypothesis_digest"]
            break
    if h_digest is None and ideation is not None:
        h_digest = ideation.get("hypothesis_digest")
    if h_digest is None:
        raise MissingArtifacts(f"run {record.run_id} has no hypothesis artifact")
    hypothesis = store.get_json_artifact(record.run_id, h_digest)

    lines: list[str] = []
    title = hypothesis.get("Title") or "Untitled hypothesis"
    lines.append(f"# {title}")
    lines.append("")
    if hypothesis.get("Abstract"):
        lines.append("## Abstract")
        lines.append("")
        lines.append(str(hypothesis["Abstract"]))
        lines.append("")

    lines.append("## Hypothesis")
    lines.append("")
    for label, key in (
        ("Context", "Context"),
        ("Independent variable (A)", "A"),
        ("Dependent variable (B)", "B"),
        ("Mechanism", "Mechanism"),
        ("Pattern", "Pattern"),
    ):
        lines.append(f"- **{label}:** {hypothesis.get(key, '')}")
    if critique and critique.get("tier"):
        lines.append(f"- **Critic tier:** {critique['tier']}")
    lines.append("")

    lines.append("## Data")
    lines.append("")
    if search:
        matches_doc = store.get_json_artifact(record.run_id, search["matches_digest"])
        cards_by_id = {c.get("Id"): c for c in matches_doc.get("Cards", [])}
        for match in matches_doc.get("Matches", []):
            card = cards_by_id.get(match["CardId"], {})
            lines.append(
                f"- {card.get('Name', match['CardId'])} "
                f"({card.get('Country/Region', '')}; {card.get('Time', '')}) — "
                f"similarity {match['Score']:.4f}"
            )
        for dataset in search.get("datasets", []):
            lines.append(
                f"- fetched `{dataset['filename']}` "
                f"(sha256 `{dataset['digest'][:16]}`, {dataset['size']} bytes)"
            )
    else:
        lines.append("- no data search recorded")
    if analysis.get("simulated"):
        sim = analysis["simulated"]
        lines.append(
            f"- simulated `{sim['filename']}` (sha256 `{sim['digest'][:16]}`)"
        )
    lines.append("")

    lines.append("## Methods")
    lines.append("")
    plan_doc = store.get_json_artifact(record.run_id, analysis["plan_digest"])
    for phase_name, phase in plan_doc.get("AnalyzingAgentPlan", {}).items():
        lines.append(f"### {phase_name}")
        for task in phase.get("tasks", []):
            lines.append(f"- {task}")
        lines.append("")

    lines.append("## Results")
    lines.append("")
    for execution in analysis.get("executions", []):
        record_doc = store.get_json_artifact(record.run_id, execution["record_digest"])
        lines.append(f"### Execution: {execution['phase']}")
        lines.append("")
        lines.append(f"- script `{record_doc['script_id']}`")
        lines.append(
            f"- exit status {record_doc['exit_status']} "
            f"after {record_doc['attempt']} attempt(s) — outcome {execution['outcome']}"
        )
        for artifact in record_doc.get("artifacts", []):
            lines.append(f"- output `{artifact['path']}` (sha256 `{artifact['digest'][:16]}`)")
        excerpt = _stdout_excerpt(record_doc.get("stdout", ""))
        if excerpt:
            lines.append("")
            lines.append("```")
            lines.append(excerpt)
            lines.append("```")
        lines.append("")

    lines.append("## Limitations")
    lines.append("")
    if critique:
        review_doc = store.get_json_artifact(record.run_id, critique["review_digest"])
        for weakness in review_doc.get("Weaknesses", []):
            lines.append(f"- {weakness}")
    else:
        lines.append("- no critique recorded")
    lines.append("")

    return "\n".join(lines)
