"""Command-line access to every engine capability.

Machine mode (``--json``) prints the canonical serialization of the wrapped
module result to stdout; diagnostics go to stderr only.  Exit codes: 0 ok,
2 usage, 3 validation, 4 provider, 5 execution, 6 state.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path
from typing import Any, Callable

import click

from urbanlab import errors as E
from urbanlab.camp import (
    build_hypothesis,
    canonical_json,
    hypothesis_document,
    parse_hypothesis,
    serialize_hypothesis,
    validate_hypothesis,
)
from urbanlab.provider import HashEmbedder, MockBackend, build_backends

EXIT_BY_CATEGORY = {
    E.ErrorCategory.USAGE: 2,
    E.ErrorCategory.VALIDATION: 3,
    E.ErrorCategory.PROVIDER: 4,
    E.ErrorCategory.EXECUTION: 5,
    E.ErrorCategory.STATE: 6,
}


class Context:
    def __init__(self, store: str, providers: str | None, seed: int, as_json: bool) -> None:
        self.store_path = Path(store)
        self.seed = seed
        self.as_json = as_json
        if providers:
            self.provider, self.embedder = build_backends(providers)
        else:
            self.provider, self.embedder = MockBackend(seed=seed), HashEmbedder(64, seed=0)

    def emit(self, document: Any, human: str | None = None) -> None:
        if self.as_json:
            click.echo(canonical_json(document) if isinstance(document, dict) else json.dumps(document, ensure_ascii=False, indent=2))
        else:
            click.echo(human if human is not None else json.dumps(document, ensure_ascii=False, indent=2))


def engine_errors(fn: Callable[..., Any]) -> Callable[..., Any]:
    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except E.UrbanLabError as exc:
            click.echo(f"error [{exc.code}]: {exc}", err=True)
            sys.exit(EXIT_BY_CATEGORY[exc.category])

    return wrapper


def _read_doc(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    return Path(source).read_text(encoding="utf-8")


@click.group()
@click.option("--store", envvar="URBANLAB_STORE", default="./urbanlab-store", show_default=True,
              help="Run/hypothesis store directory.")
@click.option("--providers", envvar="URBANLAB_PROVIDERS", default=None,
              help="Provider config file (default: deterministic offline mock).")
@click.option("--seed", envvar="URBANLAB_SEED", default=0, type=int, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Machine output: canonical JSON on stdout.")
@click.pass_context
def main(ctx: click.Context, store: str, providers: str | None, seed: int, as_json: bool) -> None:
    """urbanlab: urban research workflow engine."""
    ctx.obj = Context(store, providers, seed, as_json)


# -- hypothesis -----------------------------------------------------------------


@main.group()
def hypothesis() -> None:
    """Validate, parse, and transform hypotheses."""


@hypothesis.command("validate")
@click.argument("source", default="-")
@click.pass_obj
@engine_errors
def hypothesis_validate(ctx: Context, source: str) -> None:
    h = build_hypothesis(_read_doc(source))
    report = [v.model_dump() for v in validate_hypothesis(h)]
    ctx.emit({"violations": report},
             human="valid" if not report else "\n".join(f"{v['field_path']}: {v['message']}" for v in report))
    if report:
        sys.exit(3)


@hypothesis.command("parse")
@click.argument("source", default="-")
@click.pass_obj
@engine_errors
def hypothesis_parse(ctx: Context, source: str) -> None:
    h = parse_hypothesis(_read_doc(source))
    ctx.emit(hypothesis_document(h), human=serialize_hypothesis(h))


@hypothesis.command("transform")
@click.option("--type", "ttype", required=True,
              type=click.Choice(["recombination", "mechanism", "context", "meta"]))
@click.option("--parent", "parents", multiple=True, required=True,
              help="Parent hypothesis document file (repeatable).")
@click.option("--target-context", default=None)
@click.pass_obj
@engine_errors
def hypothesis_transform(ctx: Context, ttype: str, parents: tuple[str, ...], target_context: str | None) -> None:
    from urbanlab.ideation import generate_meta, recombine, transfer_context, transform_mechanism

    docs = [parse_hypothesis(_read_doc(p)) for p in parents]
    if ttype == "recombination":
        if len(docs) != 2:
            raise E.TooFewParents("recombination needs exactly 2 --parent files")
        child = recombine(docs[0], docs[1], ctx.provider, seed=ctx.seed)
    elif ttype == "mechanism":
        child = transform_mechanism(docs[0], ctx.provider, seed=ctx.seed)
    elif ttype == "context":
        if not target_context:
            raise E.SameContext("--target-context is required for a context transfer")
        child = transfer_context(docs[0], target_context, ctx.provider, seed=ctx.seed)
    else:
        child = generate_meta(docs, ctx.provider, seed=ctx.seed)
    ctx.emit(hypothesis_document(child), human=serialize_hypothesis(child))


# -- pool --------------------------------------------------------------------------


@main.group()
def pool() -> None:
    """Index, match, and extract data cards."""


@pool.command("index")
@click.option("--pool", "pool_dir", required=True)
@click.argument("cards", nargs=-1, required=True)
@click.pass_obj
@engine_errors
def pool_index(ctx: Context, pool_dir: str, cards: tuple[str, ...]) -> None:
    from urbanlab.datapool import DataPool, load_pool, parse_card, save_pool

    path = Path(pool_dir)
    p = load_pool(path) if (path / "vectors.bin").exists() else DataPool(ctx.embedder.dimension)
    indexed = [p.index_card(parse_card(_read_doc(c)), ctx.embedder) for c in cards]
    save_pool(p, path)
    ctx.emit({"indexed": indexed, "pool_size": len(p)},
             human=f"indexed {len(indexed)} card(s); pool now holds {len(p)}")


@pool.command("match")
@click.option("--pool", "pool_dir", required=True)
@click.option("--hypothesis", "hypothesis_file", required=True)
@click.option("--k", default=5, show_default=True, type=int)
@click.pass_obj
@engine_errors
def pool_match(ctx: Context, pool_dir: str, hypothesis_file: str, k: int) -> None:
    from urbanlab.datapool import load_pool, match_hypothesis

    h = parse_hypothesis(_read_doc(hypothesis_file))
    path = Path(pool_dir)
    if not (path / "vectors.bin").exists():
        ctx.emit({"matches": []}, human="(empty pool)")
        return
    results = match_hypothesis(load_pool(path), h, k, ctx.embedder)
    doc = {"matches": [{"card_id": r.card_id, "score": r.score} for r in results]}
    ctx.emit(doc, human="\n".join(f"{r.score:+.4f}  {r.card_id}" for r in results) or "(no matches)")


@pool.command("extract")
@click.option("--document", "document_file", required=True)
@click.option("--document-id", default="manual", show_default=True)
@click.pass_obj
@engine_errors
def pool_extract(ctx: Context, document_file: str, document_id: str) -> None:
    from urbanlab.datapool import card_document, extract_cards

    cards = extract_cards(_read_doc(document_file), document_id, ctx.provider, seed=ctx.seed)
    ctx.emit({"cards": [card_document(c) for c in cards]},
             human=f"extracted {len(cards)} card(s)")


# -- critic ------------------------------------------------------------------------


@main.group()
def critic() -> None:
    """Review subjects and assemble the calibration corpus."""


@critic.command("review")
@click.option("--subject", "subject_file", required=True,
              help="Hypothesis or paper-bundle document.")
@click.pass_obj
@engine_errors
def critic_review(ctx: Context, subject_file: str) -> None:
    from urbanlab.critic import critique, review_document

    raw = json.loads(_read_doc(subject_file))
    subject: Any
    try:
        subject = parse_hypothesis(raw)
    except E.UrbanLabError:
        subject = raw
    report = critique(subject, ctx.provider, seed=ctx.seed)
    ctx.emit(review_document(report),
             human=f"{report.decision.value}  rating={report.rating}")


@critic.command("calibrate")
@click.option("--hypotheses", "hyp_file", required=True,
              help="JSON array of [hypothesis document, impact factor] pairs.")
@click.option("--reviews", "review_file", default=None,
              help="JSON array of expert review documents.")
@click.option("--out", "out_path", required=True)
@click.pass_obj
@engine_errors
def critic_calibrate(ctx: Context, hyp_file: str, review_file: str | None, out_path: str) -> None:
    from urbanlab.critic import assemble_calibration_set

    pairs = [
        (parse_hypothesis(doc), float(impact))
        for doc, impact in json.loads(_read_doc(hyp_file))
    ]
    reviews = json.loads(_read_doc(review_file)) if review_file else []
    summary = assemble_calibration_set(pairs, reviews, out_path)
    ctx.emit(summary, human=f"wrote {summary['records']} record(s) to {summary['path']}")


# -- plan -----------------------------------------------------------------------------


@main.group(name="plan")
def plan_group() -> None:
    """Experiment planning."""


@plan_group.command("make")
@click.option("--hypothesis", "hypothesis_file", required=True)
@click.option("--cards", "cards_file", required=True, help="JSON array of card documents.")
@click.option("--snippets", "snippets_file", default=None, help="JSON array of snippet records.")
@click.pass_obj
@engine_errors
def plan_make(ctx: Context, hypothesis_file: str, cards_file: str, snippets_file: str | None) -> None:
    from urbanlab.analysis import CodeSnippet, SnippetPool, plan_document, plan_experiment
    from urbanlab.datapool import parse_card

    h = parse_hypothesis(_read_doc(hypothesis_file))
    cards = [parse_card(doc) for doc in json.loads(_read_doc(cards_file))]
    codebase = SnippetPool(ctx.embedder.dimension)
    if snippets_file:
        for raw in json.loads(_read_doc(snippets_file)):
            codebase.index_snippet(
                CodeSnippet(
                    id=str(raw["Id"]),
                    language_tag=str(raw.get("Language", "python")),
                    task_tags=tuple(raw.get("Tags", ())),
                    body=str(raw["Body"]),
                    source=str(raw.get("Source", "")),
                ),
                ctx.embedder,
            )
    plan = plan_experiment(h, cards, codebase, ctx.provider, ctx.embedder, seed=ctx.seed)
    ctx.emit(plan_document(plan), human="\n".join(p.name for p in plan.phases))


# -- exec --------------------------------------------------------------------------------


@main.group(name="exec")
def exec_group() -> None:
    """Sandboxed script execution and repair."""


def _sandbox(workdir: str, language: str, limit: float) -> Any:
    from urbanlab.analysis import SandboxConfig

    return SandboxConfig(
        work_root=workdir,
        interpreters={language: (sys.executable,)} if language == "python" else {},
        wall_clock_limit=limit,
    )


@exec_group.command("run")
@click.option("--script", "script_file", required=True)
@click.option("--language", default="python", show_default=True)
@click.option("--workdir", default="./sandbox", show_default=True)
@click.option("--limit", default=30.0, show_default=True, type=float)
@click.pass_obj
@engine_errors
def exec_run(ctx: Context, script_file: str, language: str, workdir: str, limit: float) -> None:
    from urbanlab.analysis import execute, script_artifact

    script = script_artifact(_read_doc(script_file), language)
    record = execute(script, _sandbox(workdir, language, limit))
    ctx.emit(record.to_artifact_document(),
             human=f"exit {record.exit_status} in {record.duration:.2f}s")
    if record.exit_status != 0:
        sys.exit(5)


@exec_group.command("debug")
@click.option("--script", "script_file", required=True)
@click.option("--language", default="python", show_default=True)
@click.option("--workdir", default="./sandbox", show_default=True)
@click.option("--limit", default=30.0, show_default=True, type=float)
@click.option("--max-attempts", default=5, show_default=True, type=int)
@click.pass_obj
@engine_errors
def exec_debug(ctx: Context, script_file: str, language: str, workdir: str, limit: float, max_attempts: int) -> None:
    from urbanlab.analysis import debug_loop, script_artifact

    script = script_artifact(_read_doc(script_file), language)
    record, trace = debug_loop(
        script, _sandbox(workdir, language, limit), ctx.provider,
        max_attempts=max_attempts, seed=ctx.seed,
    )
    doc = {
        "outcome": trace.outcome,
        "attempts": len(trace.attempts),
        "final": record.to_artifact_document(),
    }
    ctx.emit(doc, human=f"{trace.outcome} after {len(trace.attempts)} attempt(s)")
    if trace.outcome != "success":
        sys.exit(5)


# -- run ---------------------------------------------------------------------------------


@main.group(name="run")
def run_group() -> None:
    """Pipeline runs: start, advance, gate, report."""


def _engine(ctx: Context) -> Any:
    from urbanlab.orchestrator import Orchestrator, RunStore

    return Orchestrator(RunStore(ctx.store_path / "runs"), ctx.provider, ctx.embedder)


@run_group.command("start")
@click.option("--config", "config_file", required=True)
@click.pass_obj
@engine_errors
def run_start(ctx: Context, config_file: str) -> None:
    engine = _engine(ctx)
    run_id = engine.start_run(json.loads(_read_doc(config_file)))
    ctx.emit({"run_id": run_id}, human=run_id)


@run_group.command("advance")
@click.argument("run_id")
@click.option("--until-blocked", is_flag=True,
              help="Keep advancing until the run gates, finishes, or fails.")
@click.pass_obj
@engine_errors
def run_advance(ctx: Context, run_id: str, until_blocked: bool) -> None:
    from urbanlab.orchestrator import PipelineStage

    engine = _engine(ctx)
    events = [engine.advance(run_id).model_dump(mode="json")]
    if until_blocked:
        while engine.resume(run_id).stage not in (
            PipelineStage.DONE,
            PipelineStage.FAILED,
            PipelineStage.AWAITING_HUMAN_GATE,
        ):
            events.append(engine.advance(run_id).model_dump(mode="json"))
    stage = engine.resume(run_id).stage.value
    ctx.emit({"events": events, "stage": stage},
             human="\n".join(f"{e['stage']}:{e['kind']}" for e in events) + f"\nnow at {stage}")


@run_group.command("gate")
@click.argument("run_id")
@click.option("--verdict", required=True, type=click.Choice(["approve", "reject", "edit"]))
@click.option("--hypothesis", "hypothesis_file", default=None,
              help="Edited hypothesis document (edit verdict only).")
@click.option("--actor", default="cli", show_default=True)
@click.pass_obj
@engine_errors
def run_gate(ctx: Context, run_id: str, verdict: str, hypothesis_file: str | None, actor: str) -> None:
    import time as _time

    from urbanlab.orchestrator import GateDecision

    edited = json.loads(_read_doc(hypothesis_file)) if hypothesis_file else None
    try:
        decision = GateDecision(
            gate_id=f"{run_id}-cli",
            verdict=verdict,  # type: ignore[arg-type]
            edited_hypothesis=edited,
            actor=actor,
            timestamp=_time.time(),
        )
    except ValueError as exc:
        raise E.SchemaViolation(str(exc)) from exc
    event = _engine(ctx).submit_gate_decision(run_id, decision)
    ctx.emit(event.model_dump(mode="json"), human=f"{event.kind.value} at seq {event.seq}")


@run_group.command("report")
@click.argument("run_id")
@click.pass_obj
@engine_errors
def run_report(ctx: Context, run_id: str) -> None:
    text = _engine(ctx).draft_report(run_id)
    click.echo(text)


# -- fixtures / serve ----------------------------------------------------------------------


@main.group()
def fixtures() -> None:
    """Bundled toy corpora and listing fixtures."""


@fixtures.command("generate")
@click.option("--dest", required=True)
@click.pass_obj
@engine_errors
def fixtures_generate(ctx: Context, dest: str) -> None:
    from urbanlab.fixtures import generate_workspace

    paths = generate_workspace(dest, embedder=ctx.embedder, seed=ctx.seed or 7)
    doc = {k: v for k, v in paths.items() if k != "config"}
    ctx.emit(doc, human="\n".join(f"{k}: {v}" for k, v in doc.items()))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8820, show_default=True, type=int)
@click.option("--pool", "pool_dir", default=None, help="Data pool served by /datapool/match.")
@click.pass_obj
@engine_errors
def serve(ctx: Context, host: str, port: int, pool_dir: str | None) -> None:
    import uvicorn

    from urbanlab.api import create_app

    app = create_app(ctx.store_path, ctx.provider, ctx.embedder, pool_path=pool_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
