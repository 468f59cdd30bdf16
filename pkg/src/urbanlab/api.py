"""HTTP façade over the engine: run management, hypothesis operations, data
search, gate decisions, and a line-delimited live event stream with
client-driven replay.

Response bodies are the canonical serializations of the underlying module
results; every engine error class maps to exactly one (status, code) pair.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import Any, Iterator

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel, Field

from urbanlab import errors as E
from urbanlab.camp import hypothesis_document, parse_hypothesis
from urbanlab.datapool.pool import DataPool, load_pool, match_hypothesis
from urbanlab.ideation import generate_meta, recombine, transfer_context, transform_mechanism
from urbanlab.orchestrator import (
    GateDecision,
    Orchestrator,
    PipelineStage,
    RunStore,
)
from urbanlab.orchestrator.store import HypothesisStore
from urbanlab.provider import CompletionBackend, EmbeddingBackend

# -- error mapping -----------------------------------------------------------

_STATUS_BY_CLASS: dict[type[E.UrbanLabError], int] = {
    E.UnknownRun: 404,
    E.UnknownEntity: 404,
    E.IllegalState: 409,
    E.MissingArtifacts: 409,
    E.InvalidConfig: 400,
    E.CorruptLog: 500,
    E.StageFailure: 500,
}

_STATUS_BY_CATEGORY = {
    E.ErrorCategory.USAGE: 422,
    E.ErrorCategory.VALIDATION: 422,
    E.ErrorCategory.PROVIDER: 502,
    E.ErrorCategory.EXECUTION: 500,
    E.ErrorCategory.STATE: 409,
}


def error_status(exc: E.UrbanLabError) -> int:
    for klass, status in _STATUS_BY_CLASS.items():
        if isinstance(exc, klass):
            return status
    return _STATUS_BY_CATEGORY[exc.category]


class TransformRequest(BaseModel):
    type: str
    other_parent_id: str | None = None
    parent_ids: list[str] = Field(default_factory=list)
    target_context: str | None = None
    seed: int = 0


class MatchRequest(BaseModel):
    hypothesis_id: str
    k: int = Field(default=5, ge=1)


class GateRequest(BaseModel):
    verdict: str
    edited_hypothesis: dict[str, Any] | None = None
    actor: str = "human"
    gate_id: str = ""


def create_app(
    store_path: str | Path,
    provider: CompletionBackend,
    embedder: EmbeddingBackend,
    pool_path: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="urbanlab", version="0.1.0")
    # same layout the CLI uses, so one --store serves both entry points
    store = RunStore(Path(store_path) / "runs")
    engine = Orchestrator(store, provider, embedder)
    hypotheses = HypothesisStore(Path(store_path) / "hypotheses")
    pool_cache: dict[str, DataPool] = {}

    def _pool() -> DataPool:
        if pool_path is None:
            raise E.InvalidConfig("no data pool configured for this service")
        key = str(pool_path)
        if key not in pool_cache:
            pool_cache[key] = load_pool(pool_path)
        return pool_cache[key]

    @app.exception_handler(E.UrbanLabError)
    async def _engine_error(request: Request, exc: E.UrbanLabError) -> JSONResponse:
        status = error_status(exc)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "status": status},
        )

    # -- runs ------------------------------------------------------------------

    @app.post("/runs", status_code=201)
    def start_run(config: dict[str, Any]) -> dict[str, str]:
        return {"run_id": engine.start_run(config)}

    @app.get("/runs")
    def list_runs() -> dict[str, list[str]]:
        return {"runs": store.run_ids()}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict[str, Any]:
        record = engine.resume(run_id)
        return {
            "run_id": record.run_id,
            "stage": record.stage.value,
            "artifacts": {k: list(v) for k, v in record.artifacts.items()},
            "gate_decisions": [g.model_dump(mode="json") for g in record.gate_decisions],
            "last_seq": record.events[-1].seq if record.events else -1,
            "config": record.config,
        }

    @app.post("/runs/{run_id}/advance")
    def advance(run_id: str, background: bool = False) -> Any:
        if background:
            if not store.exists(run_id):
                raise E.UnknownRun(f"no run {run_id!r}")
            worker = threading.Thread(target=_advance_quietly, args=(run_id,), daemon=True)
            worker.start()
            return JSONResponse(status_code=202, content={"run_id": run_id, "status": "accepted"})
        event = engine.advance(run_id)
        return event.model_dump(mode="json")

    def _advance_quietly(run_id: str) -> None:
        try:
            engine.advance(run_id)
        except E.UrbanLabError:
            pass  # outcome lands in the event log either way

    @app.post("/runs/{run_id}/gate")
    def gate(run_id: str, body: GateRequest) -> dict[str, Any]:
        if body.verdict not in ("approve", "reject", "edit"):
            raise E.SchemaViolation(f"unknown gate verdict {body.verdict!r}")
        try:
            decision = GateDecision(
                gate_id=body.gate_id or f"{run_id}-gate",
                verdict=body.verdict,  # type: ignore[arg-type]
                edited_hypothesis=body.edited_hypothesis,
                actor=body.actor,
                timestamp=time.time(),
            )
        except ValueError as exc:
            raise E.SchemaViolation(str(exc)) from exc
        event = engine.submit_gate_decision(run_id, decision)
        return event.model_dump(mode="json")

    @app.get("/runs/{run_id}/report")
    def report(run_id: str) -> PlainTextResponse:
        return PlainTextResponse(engine.draft_report(run_id), media_type="text/markdown")

    # -- event stream --------------------------------------------------------------

    @app.get("/runs/{run_id}/events")
    def events(run_id: str, after: int = -1, follow: bool = True) -> StreamingResponse:
        if not store.exists(run_id):
            raise E.UnknownRun(f"no run {run_id!r}")

        def frames() -> Iterator[str]:
            last = after
            while True:
                batch = store.events(run_id)
                terminal = False
                for event in batch:
                    if event.seq <= last:
                        continue
                    frame = {"run_id": run_id, "seq": event.seq, "event": event.model_dump(mode="json")}
                    yield json.dumps(frame, ensure_ascii=False) + "\n"
                    last = event.seq
                if batch:
                    stage = None
                    # fold-free terminality check: scan tail events
                    for event in reversed(batch):
                        if event.kind.value in ("entered", "failed"):
                            stage = (
                                PipelineStage.FAILED
                                if event.kind.value == "failed"
                                else event.stage
                            )
                            break
                    terminal = stage in (PipelineStage.DONE, PipelineStage.FAILED)
                if not follow or terminal:
                    return
                time.sleep(0.05)

        return StreamingResponse(frames(), media_type="application/x-ndjson")

    # -- hypotheses -----------------------------------------------------------------

    @app.get("/hypotheses")
    def list_hypotheses() -> dict[str, Any]:
        return {
            "hypotheses": [json.loads(hypotheses.load_text(hid)) for hid in hypotheses.ids()]
        }

    @app.post("/hypotheses", status_code=201)
    def add_hypothesis(doc: dict[str, Any]) -> dict[str, Any]:
        h = parse_hypothesis(doc)
        from urbanlab.camp import serialize_hypothesis

        hypotheses.save(serialize_hypothesis(h), h.id)
        return hypothesis_document(h)

    @app.post("/hypotheses/{hypothesis_id}/transform", status_code=201)
    def transform(hypothesis_id: str, body: TransformRequest) -> dict[str, Any]:
        if not hypotheses.exists(hypothesis_id):
            raise E.UnknownEntity(f"no hypothesis {hypothesis_id!r}")
        h = parse_hypothesis(hypotheses.load_text(hypothesis_id))
        kind = body.type.replace(" ", "").replace("_", "").lower()
        if kind == "recombination":
            if not body.other_parent_id:
                raise E.SchemaViolation("recombination needs other_parent_id")
            if not hypotheses.exists(body.other_parent_id):
                raise E.UnknownEntity(f"no hypothesis {body.other_parent_id!r}")
            other = parse_hypothesis(hypotheses.load_text(body.other_parent_id))
            child = recombine(h, other, provider, seed=body.seed)
        elif kind == "mechanismtransformation":
            child = transform_mechanism(h, provider, seed=body.seed)
        elif kind == "contexttransfer":
            if not body.target_context:
                raise E.SameContext("context transfer needs a non-empty target_context")
            child = transfer_context(h, body.target_context, provider, seed=body.seed)
        elif kind == "metahypothesis":
            parents = [h]
            for pid in body.parent_ids:
                if pid == hypothesis_id:
                    continue
                if not hypotheses.exists(pid):
                    raise E.UnknownEntity(f"no hypothesis {pid!r}")
                parents.append(parse_hypothesis(hypotheses.load_text(pid)))
            child = generate_meta(parents, provider, seed=body.seed)
        else:
            raise E.SchemaViolation(f"unknown transformation type {body.type!r}")
        from urbanlab.camp import serialize_hypothesis

        hypotheses.save(serialize_hypothesis(child), child.id)
        return hypothesis_document(child)

    # -- data pool ---------------------------------------------------------------------

    @app.post("/datapool/match")
    def match(body: MatchRequest) -> dict[str, Any]:
        if not hypotheses.exists(body.hypothesis_id):
            raise E.UnknownEntity(f"no hypothesis {body.hypothesis_id!r}")
        h = parse_hypothesis(hypotheses.load_text(body.hypothesis_id))
        results = match_hypothesis(_pool(), h, body.k, embedder)
        return {"matches": [{"card_id": r.card_id, "score": r.score} for r in results]}

    return app
