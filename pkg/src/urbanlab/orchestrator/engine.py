"""The end-to-end pipeline driver: a persistent, resumable state machine.

Every mutation re-reads the run's event log, folds it into state, executes
exactly one stage, and appends the resulting events — so a process crash at
any point leaves a resumable run, and resume() is just the fold.
"""

from __future__ import annotations

import json
import sys
import time
import uuid
from pathlib import Path
from typing import Any

from urbanlab.analysis.debug import debug_loop
from urbanlab.analysis.plan import generate_script, plan_document, plan_experiment
from urbanlab.analysis.sandbox import SandboxConfig
from urbanlab.analysis.simulator import run_simulation, toy_diffusion_adapter
from urbanlab.analysis.snippets import CodeSnippet, SnippetPool
from urbanlab.camp import (
    CampHypothesis,
    TierRating,
    ensure_valid,
    hypothesis_document,
    parse_hypothesis,
)
from urbanlab.critic.review import RubricConfig, critique, review_document
from urbanlab.datapool.cards import card_document, parse_card
from urbanlab.datapool.pool import DataPool, load_pool, match_hypothesis
from urbanlab.errors import (
    IllegalState,
    InvalidConfig,
    InvalidHypothesis,
    MissingArtifacts,
    StageFailure,
    UrbanLabError,
)
from urbanlab.ideation.refine import DEFAULT_PANEL, PanelConfig, run_panel, synthesize_revision
from urbanlab.orchestrator.events import (
    EventKind,
    GateDecision,
    PipelineStage,
    RunRecord,
    RunState,
    StageEvent,
    fold_events,
)
from urbanlab.orchestrator.report import draft_report as _draft_report
from urbanlab.orchestrator.store import RunStore
from urbanlab.provider import CompletionBackend, EmbeddingBackend, TemplateStore

DEFAULT_REFINEMENT_BUDGET = 3
DEFAULT_MATCH_K = 3


def _dataset_suffix(url: str) -> str:
    tail = url.rsplit("/", 1)[-1]
    if "." in tail:
        ext = "." + tail.rsplit(".", 1)[-1]
        if 1 < len(ext) <= 8 and ext[1:].isalnum():
            return ext
    return ".dat"


class Orchestrator:
    def __init__(
        self,
        store: RunStore,
        provider: CompletionBackend,
        embedder: EmbeddingBackend,
        templates: TemplateStore | None = None,
    ) -> None:
        self.store = store
        self.provider = provider
        self.embedder = embedder
        self.templates = templates

    # -- event plumbing ---------------------------------------------------------

    def _next_ts(self, state: RunState | None) -> float:
        now = time.time()
        if state is not None and now <= state.last_ts:
            now = state.last_ts + 1e-6
        return now

    def _append(
        self,
        run_id: str,
        state: RunState | None,
        stage: PipelineStage,
        kind: EventKind,
        payload: dict[str, Any] | None = None,
    ) -> tuple[StageEvent, RunState]:
        seq = (state.last_seq if state is not None else -1) + 1
        event = StageEvent(
            seq=seq,
            ts=self._next_ts(state),
            stage=stage,
            kind=kind,
            payload=payload or {},
        )
        self.store.append_event(run_id, event)
        new_state = fold_events(self.store.events(run_id))
        return event, new_state

    def _load_state(self, run_id: str) -> RunState:
        return fold_events(self.store.events(run_id))

    # -- run lifecycle ---------------------------------------------------------------

    def start_run(self, config: dict[str, Any]) -> str:
        """Validate config, persist it, and enter the Ideation stage."""
        config = dict(config)
        try:
            seed_doc = config["hypothesis"]
        except KeyError:
            raise InvalidConfig("config needs a 'hypothesis' document") from None
        try:
            parse_hypothesis(seed_doc)
        except UrbanLabError as exc:
            raise InvalidConfig(f"seed hypothesis is invalid: {exc}") from exc

        pool_path = config.get("pool_path")
        if not pool_path or not Path(pool_path).is_dir():
            raise InvalidConfig(f"config names a missing data pool: {pool_path!r}")
        snippet_path = config.get("snippet_path")
        if snippet_path and not Path(snippet_path).is_file():
            raise InvalidConfig(f"config names a missing snippet file: {snippet_path!r}")
        try:
            TierRating(config.get("target_tier", TierRating.TIER3.value))
        except ValueError as exc:
            raise InvalidConfig(f"bad target_tier: {exc}") from exc
        gate_policy = config.get("gate_policy", "manual")
        if gate_policy not in ("manual", "auto_approve"):
            raise InvalidConfig(f"unknown gate_policy {gate_policy!r}")

        run_id = "r-" + uuid.uuid4().hex[:12]
        self.store.create_run(run_id, config)
        self._append(run_id, None, PipelineStage.IDEATION, EventKind.ENTERED)
        return run_id

    def resume(self, run_id: str) -> RunRecord:
        """Rebuild a run purely from its event log, validating every transition."""
        events = self.store.events(run_id)
        state = fold_events(events)
        return RunRecord(
            run_id=run_id,
            config=self.store.config(run_id),
            stage=state.stage,
            events=tuple(events),
            artifacts=state.artifacts,
            gate_decisions=state.gate_decisions,
        )

    def record(self, run_id: str) -> RunRecord:
        return self.resume(run_id)

    # -- stage execution ------------------------------------------------------------

    def advance(self, run_id: str) -> StageEvent:
        """Execute the current stage and transition along the stage graph."""
        with self.store.lock(run_id):
            state = self._load_state(run_id)
            if state.stage in (PipelineStage.DONE, PipelineStage.FAILED):
                raise IllegalState(f"run {run_id} is terminal ({state.stage.value})")
            if state.stage is PipelineStage.AWAITING_HUMAN_GATE:
                raise IllegalState(f"run {run_id} is gated; submit a gate decision")
            config = self.store.config(run_id)
            try:
                if state.stage is PipelineStage.IDEATION:
                    return self._run_ideation(run_id, state, config)
                if state.stage is PipelineStage.CRITIQUE:
                    return self._run_critique(run_id, state, config)
                if state.stage is PipelineStage.DATA_SEARCH:
                    return self._run_data_search(run_id, state, config)
                if state.stage is PipelineStage.ANALYSIS:
                    return self._run_analysis(run_id, state, config)
                if state.stage is PipelineStage.WRITING:
                    return self._run_writing(run_id, state, config)
                raise IllegalState(f"no executor for stage {state.stage.value}")
            except IllegalState:
                raise
            except UrbanLabError as exc:
                _, failed_state = self._append(
                    run_id,
                    state,
                    state.stage,
                    EventKind.FAILED,
                    {"cause": f"{exc.code}: {exc}"},
                )
                raise StageFailure(
                    f"stage {state.stage.value} failed: {exc}", cause=exc.code
                ) from exc

    def submit_gate_decision(self, run_id: str, decision: GateDecision) -> StageEvent:
        """Resolve the human gate: approve, reject, or edit-and-approve."""
        with self.store.lock(run_id):
            state = self._load_state(run_id)
            if state.stage is not PipelineStage.AWAITING_HUMAN_GATE:
                raise IllegalState(f"run {run_id} is not awaiting a gate decision")
            payload: dict[str, Any] = {"decision": decision.model_dump(mode="json")}
            if decision.verdict == "edit":
                assert decision.edited_hypothesis is not None
                edited = parse_hypothesis(decision.edited_hypothesis)  # InvalidHypothesis on bad edit
                digest = self.store.put_json_artifact(run_id, hypothesis_document(edited))
                payload["hypothesis_digest"] = digest
            event, state = self._append(
                run_id, state, PipelineStage.AWAITING_HUMAN_GATE, EventKind.GATE_RESOLVED, payload
            )
            if decision.verdict == "reject":
                self._append(
                    run_id,
                    state,
                    PipelineStage.AWAITING_HUMAN_GATE,
                    EventKind.FAILED,
                    {"cause": "human_reject"},
                )
            else:
                self._append(run_id, state, PipelineStage.DATA_SEARCH, EventKind.ENTERED)
            return event

    def draft_report(self, run_id: str) -> str:
        return _draft_report(self.resume(run_id), self.store)

    # -- helpers ---------------------------------------------------------------------

    def _working_hypothesis(self, run_id: str, state: RunState) -> CampHypothesis:
        if state.hypothesis_digest is None:
            raise MissingArtifacts(f"run {run_id} has no working hypothesis yet")
        doc = self.store.get_json_artifact(run_id, state.hypothesis_digest)
        return parse_hypothesis(doc)

    def _store_hypothesis(self, run_id: str, h: CampHypothesis) -> str:
        return self.store.put_json_artifact(run_id, hypothesis_document(h))

    def _seed(self, config: dict[str, Any]) -> int:
        return int(config.get("seed", 0))

    # -- Ideation ----------------------------------------------------------------------

    def _run_ideation(self, run_id: str, state: RunState, config: dict[str, Any]) -> StageEvent:
        if state.ideation_rounds <= 1:
            h = parse_hypothesis(config["hypothesis"])
        else:
            # refinement loop-back: one panel debate + synthesis pass
            current = self._working_hypothesis(run_id, state)
            panel_cfg = config.get("panel")
            panel = PanelConfig(**panel_cfg) if panel_cfg else DEFAULT_PANEL
            iteration = state.ideation_rounds - 1
            seed = self._seed(config) + iteration * 1000
            transcript = run_panel(current, panel, self.provider, seed, self.templates)
            h = synthesize_revision(
                current, transcript, iteration, self.provider, seed + 999, self.templates
            )
        digest = self._store_hypothesis(run_id, ensure_valid(h))
        event, state = self._append(
            run_id,
            state,
            PipelineStage.IDEATION,
            EventKind.COMPLETED,
            {"artifacts": [digest], "hypothesis_digest": digest},
        )
        self._append(run_id, state, PipelineStage.CRITIQUE, EventKind.ENTERED)
        return event

    # -- Critique -------------------------------------------------------------------------

    def _run_critique(self, run_id: str, state: RunState, config: dict[str, Any]) -> StageEvent:
        h = self._working_hypothesis(run_id, state)
        rubric_cfg = config.get("rubric")
        rubric = RubricConfig(**rubric_cfg) if rubric_cfg else RubricConfig()
        report = critique(
            h,
            self.provider,
            rubric,
            seed=self._seed(config) + state.ideation_rounds,
            templates=self.templates,
        )
        review_digest = self.store.put_json_artifact(run_id, review_document(report))

        target = TierRating(config.get("target_tier", TierRating.TIER3.value))
        budget = int(config.get("refinement_budget", DEFAULT_REFINEMENT_BUDGET))
        loops_done = state.ideation_rounds - 1

        event, state = self._append(
            run_id,
            state,
            PipelineStage.CRITIQUE,
            EventKind.COMPLETED,
            {
                "artifacts": [review_digest],
                "review_digest": review_digest,
                "tier": report.decision.value,
                "loop": loops_done,
            },
        )
        if report.decision < target and loops_done < budget:
            self._append(run_id, state, PipelineStage.IDEATION, EventKind.ENTERED)
            return event

        _, state = self._append(
            run_id, state, PipelineStage.AWAITING_HUMAN_GATE, EventKind.ENTERED
        )
        _, state = self._append(
            run_id,
            state,
            PipelineStage.AWAITING_HUMAN_GATE,
            EventKind.GATE_REQUESTED,
            {"gate_id": f"{run_id}-gate-{state.last_seq + 1}", "tier": report.decision.value},
        )
        if config.get("gate_policy", "manual") == "auto_approve":
            decision = GateDecision(
                gate_id=f"{run_id}-auto",
                verdict="approve",
                actor="auto",
                timestamp=state.last_ts,
            )
            _, state = self._append(
                run_id,
                state,
                PipelineStage.AWAITING_HUMAN_GATE,
                EventKind.GATE_RESOLVED,
                {"decision": decision.model_dump(mode="json")},
            )
            self._append(run_id, state, PipelineStage.DATA_SEARCH, EventKind.ENTERED)
        return event

    # -- DataSearch -------------------------------------------------------------------------

    def _run_data_search(self, run_id: str, state: RunState, config: dict[str, Any]) -> StageEvent:
        from urbanlab.datapool.fetch import FetchPolicy, fetch_dataset

        h = self._working_hypothesis(run_id, state)
        pool: DataPool = load_pool(config["pool_path"])
        k = int(config.get("match_k", DEFAULT_MATCH_K))
        matches = match_hypothesis(pool, h, k, self.embedder)

        fetch_mode = config.get("fetch_mode", "dry_run")
        policy = FetchPolicy(mode="http_get" if fetch_mode == "http_get" else "dry_run")
        datasets: list[dict[str, Any]] = []
        planned: list[dict[str, Any]] = []
        for match in matches:
            card = pool.card(match.card_id)
            if policy.mode == "dry_run" or card.url == "restricted":
                planned.append({"card_id": card.id, "url": card.url})
                continue
            fetched = fetch_dataset(
                card, policy, dest_dir=self.store.run_dir(run_id) / "fetch-cache"
            )
            payload = Path(fetched.path).read_bytes()
            digest = self.store.put_artifact(run_id, payload)
            datasets.append(
                {
                    "card_id": card.id,
                    "digest": digest,
                    "filename": f"{card.id}{_dataset_suffix(card.url)}",
                    "size": fetched.size,
                }
            )

        matches_doc = {
            "Matches": [{"CardId": m.card_id, "Score": m.score} for m in matches],
            "Cards": [card_document(pool.card(m.card_id)) for m in matches],
            "Planned": planned,
        }
        matches_digest = self.store.put_json_artifact(run_id, matches_doc)
        artifact_ids = [matches_digest] + [d["digest"] for d in datasets]
        event, state = self._append(
            run_id,
            state,
            PipelineStage.DATA_SEARCH,
            EventKind.COMPLETED,
            {
                "artifacts": artifact_ids,
                "matches_digest": matches_digest,
                "datasets": datasets,
            },
        )
        self._append(run_id, state, PipelineStage.ANALYSIS, EventKind.ENTERED)
        return event

    # -- Analysis -----------------------------------------------------------------------------

    def _load_snippets(self, config: dict[str, Any]) -> SnippetPool:
        pool = SnippetPool(dimension=self.embedder.dimension)
        path = config.get("snippet_path")
        if path:
            for raw in json.loads(Path(path).read_text(encoding="utf-8")):
                snippet = CodeSnippet(
                    id=str(raw["Id"]),
                    language_tag=str(raw.get("Language", "python")),
                    task_tags=tuple(str(t) for t in raw.get("Tags", ())),
                    body=str(raw["Body"]),
                    source=str(raw.get("Source", "")),
                )
                pool.index_snippet(snippet, self.embedder)
        return pool

    def _sandbox(self, run_id: str, config: dict[str, Any]) -> SandboxConfig:
        interpreters = {
            tag: tuple(cmd)
            for tag, cmd in config.get("interpreters", {"python": [sys.executable]}).items()
        }
        return SandboxConfig(
            work_root=str(self.store.run_dir(run_id) / "sandbox"),
            interpreters=interpreters,
            wall_clock_limit=float(config.get("wall_clock_limit", 60.0)),
        )

    def _run_analysis(self, run_id: str, state: RunState, config: dict[str, Any]) -> StageEvent:
        h = self._working_hypothesis(run_id, state)
        search_payload = None
        for event in reversed(self.store.events(run_id)):
            if event.kind is EventKind.COMPLETED and event.stage is PipelineStage.DATA_SEARCH:
                search_payload = event.payload
                break
        if search_payload is None:
            raise MissingArtifacts("Analysis requires a completed DataSearch stage")

        matches_doc = self.store.get_json_artifact(run_id, search_payload["matches_digest"])
        cards = [parse_card(doc) for doc in matches_doc["Cards"]]
        if not cards:
            raise StageFailure("no matched data cards to analyze")

        sandbox = self._sandbox(run_id, config)
        stage_files: dict[str, Path] = {}
        artifact_ids: list[str] = []
        for dataset in search_payload.get("datasets", []):
            stage_files[dataset["filename"]] = self.store.artifact_path(
                run_id, dataset["digest"]
            )

        simulated: dict[str, Any] | None = None
        sim_cfg = config.get("simulator") or {}
        if sim_cfg.get("enabled"):
            adapter = toy_diffusion_adapter()
            dataset = run_simulation(
                adapter,
                sim_cfg.get("params", {}),
                sandbox,
                dest_dir=self.store.run_dir(run_id) / "fetch-cache",
            )
            digest = self.store.put_artifact(run_id, Path(dataset.path).read_bytes())
            simulated = {"digest": digest, "filename": "simulated.csv"}
            stage_files["simulated.csv"] = self.store.artifact_path(run_id, digest)
            artifact_ids.append(digest)

        codebase = self._load_snippets(config)
        seed = self._seed(config)
        plan = plan_experiment(
            h, cards, codebase, self.provider, self.embedder, seed=seed, templates=self.templates
        )
        plan_digest = self.store.put_json_artifact(run_id, plan_document(plan))
        artifact_ids.insert(0, plan_digest)

        language = str(config.get("language", "python"))
        max_attempts = int(config.get("max_attempts", 5))
        abort_on_failure = bool(config.get("abort_on_phase_failure", True))
        available = sorted(stage_files)
        executions: list[dict[str, Any]] = []

        for index, phase in enumerate(plan.phases):
            snippet_ids = plan.retrieved_snippets.get(phase.name, ())
            snippets = [codebase.snippet(sid) for sid in snippet_ids]
            script = generate_script(
                phase,
                snippets,
                language,
                self.provider,
                available_inputs=available,
                seed=seed + index,
                templates=self.templates,
            )
            final_record, trace = debug_loop(
                script,
                sandbox,
                self.provider,
                max_attempts=max_attempts,
                stage_files=stage_files,
                seed=seed + index * 100,
                templates=self.templates,
            )
            record_digest = self.store.put_json_artifact(
                run_id, final_record.to_artifact_document()
            )
            trace_digest = self.store.put_json_artifact(
                run_id,
                {
                    "outcome": trace.outcome,
                    "max_attempts": trace.max_attempts,
                    "attempts": [
                        {
                            "record": a.record.to_artifact_document(),
                            "diagnosis": a.diagnosis.value if a.diagnosis else None,
                            "patch_summary": a.patch_summary,
                        }
                        for a in trace.attempts
                    ],
                },
            )
            artifact_ids.extend([record_digest, trace_digest])
            # persist the script outputs themselves
            for file_digest in final_record.artifacts:
                blob = (Path(final_record.work_dir) / file_digest.path).read_bytes()
                artifact_ids.append(self.store.put_artifact(run_id, blob))
            executions.append(
                {
                    "phase": phase.name,
                    "script_id": final_record.script_id,
                    "record_digest": record_digest,
                    "trace_digest": trace_digest,
                    "outcome": trace.outcome,
                }
            )
            if trace.outcome != "success" and abort_on_failure:
                raise StageFailure(
                    f"phase {phase.name!r} did not execute successfully ({trace.outcome})"
                )

        event, state = self._append(
            run_id,
            state,
            PipelineStage.ANALYSIS,
            EventKind.COMPLETED,
            {
                "artifacts": artifact_ids,
                "plan_digest": plan_digest,
                "executions": executions,
                "simulated": simulated,
            },
        )
        self._append(run_id, state, PipelineStage.WRITING, EventKind.ENTERED)
        return event

    # -- Writing ---------------------------------------------------------------------------------

    def _run_writing(self, run_id: str, state: RunState, config: dict[str, Any]) -> StageEvent:
        report_text = _draft_report(self.resume(run_id), self.store)
        digest = self.store.put_artifact(run_id, report_text.encode("utf-8"))
        self.store.write_report(run_id, report_text)
        event, state = self._append(
            run_id,
            state,
            PipelineStage.WRITING,
            EventKind.COMPLETED,
            {"artifacts": [digest], "report_digest": digest},
        )
        self._append(run_id, state, PipelineStage.DONE, EventKind.ENTERED)
        return event
