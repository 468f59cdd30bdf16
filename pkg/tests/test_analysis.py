from __future__ import annotations

import hashlib
import json
import math
import random
import sys

import pytest

from urbanlab.analysis import (
    CodeSnippet,
    ErrorClass,
    SandboxConfig,
    SnippetPool,
    classify_error,
    debug_loop,
    execute,
    generate_script,
    parse_plan,
    plan_document,
    plan_experiment,
    retrieve_snippets,
    run_simulation,
    script_artifact,
    serialize_plan,
    snippet_embedding_text,
    toy_diffusion_adapter,
    validate_params,
)
from urbanlab.analysis.toy_simulator import simulate
from urbanlab.datapool import DataCard, DataCategory
from urbanlab.errors import (
    EmptyPlan,
    IllegalState,
    ProviderFailure,
    SchemaViolation,
    SimulatorFailure,
    UnknownLanguageTag,
)
from urbanlab.fixtures import plan_listing_document
from urbanlab.provider import CompletionRequest, MockBackend

from conftest import random_text


def _snippet(i: int, tags: tuple[str, ...], body: str = "print('x')\n") -> CodeSnippet:
    return CodeSnippet(id=f"snip-{i:03d}", language_tag="python", task_tags=tags, body=body)


def _sandbox(tmp_path, limit: float = 20.0) -> SandboxConfig:
    return SandboxConfig(
        work_root=str(tmp_path / "sandbox"),
        interpreters={"python": (sys.executable,)},
        wall_clock_limit=limit,
    )


class TestRetrieval:
    def test_tagged_snippet_ranks_first(self, embedder):
        pool = SnippetPool(dimension=64)
        target = _snippet(0, ("DiD", "difference in differences", "panel regression"))
        pool.index_snippet(target, embedder)
        rng = random.Random(0)
        for i in range(1, 30):
            pool.index_snippet(_snippet(i, (random_text(rng, 2, 4),)), embedder)
        results = retrieve_snippets(
            pool, snippet_embedding_text(target), 5, embedder
        )
        assert results[0].snippet_id == "snip-000"
        assert abs(results[0].score - 1.0) < 1e-6

    def test_empty_pool(self, embedder):
        assert retrieve_snippets(SnippetPool(dimension=64), "anything", 3, embedder) == []

    def test_brute_force_oracle_on_200_snippets(self, embedder):
        rng = random.Random(9)
        pool = SnippetPool(dimension=64)
        for i in range(200):
            pool.index_snippet(
                _snippet(i, tuple(random_text(rng, 1, 3) for _ in range(2)), random_text(rng, 6, 30)),
                embedder,
            )
        for query in ("regression on panel data", "aggregate mobility by year", "plot radiance"):
            qv = embedder.embed(query).values
            scored = sorted(
                (
                    (-math.fsum(float(a) * float(b) for a, b in zip(pool._vectors[sid], qv)), sid)
                    for sid in sorted(pool._snippets)
                ),
            )
            expected = [sid for _, sid in scored[:10]]
            got = [r.snippet_id for r in retrieve_snippets(pool, query, 10, embedder)]
            assert got == expected


class TestPlan:
    def test_listing_round_trip(self):
        plan = parse_plan(plan_listing_document())
        assert [p.name for p in plan.phases] == [
            "Phase1_ProjectSetup",
            "Phase2_DataProcessing",
            "Phase3_SatelliteAndCNN",
            "Phase4_WealthImputation_CausalInference",
            "Phase5_Confounding_AssetImpact",
            "Phase6_Visualization",
            "Phase7_Testing_Reproducibility",
        ]
        again = parse_plan(serialize_plan(plan))
        assert again.phases == plan.phases
        assert again.extras["Paper"] == plan_listing_document()["Paper"]
        doc = plan_document(plan)
        assert doc["AnalyzingAgentPlan"] == plan_listing_document()["AnalyzingAgentPlan"]

    def test_phase_invariants(self):
        with pytest.raises(SchemaViolation):
            parse_plan({"AnalyzingAgentPlan": {"P1": {"tasks": []}}})
        with pytest.raises(SchemaViolation):
            parse_plan({"AnalyzingAgentPlan": {}})

    def test_scripted_two_phase_template(self, mobile_money, embedder):
        scripted = {
            "AnalyzingAgentPlan": {
                "PhaseA": {"tasks": ["load data"]},
                "PhaseB": {"tasks": ["fit model", "report"]},
            }
        }
        backend = MockBackend(use_default=False).script(json.dumps(scripted))
        cards = [
            DataCard(
                id="c1",
                name="mobility",
                category=DataCategory.HUMAN_BEHAVIOUR,
                description="gps mobility traces",
                url="https://x.org/m.csv",
            )
        ]
        plan = plan_experiment(mobile_money, cards, SnippetPool(64), backend, embedder)
        assert [p.name for p in plan.phases] == ["PhaseA", "PhaseB"]
        assert plan.hypothesis_id == mobile_money.id
        assert plan.dataset_ids == ("c1",)

    def test_zero_phase_response_is_empty_plan(self, mobile_money, embedder):
        empty = json.dumps({"AnalyzingAgentPlan": {}})
        backend = MockBackend(use_default=False).script(empty, empty, empty, empty, empty, empty, empty, empty, empty)
        cards = [
            DataCard(
                id="c1",
                name="m",
                category=DataCategory.HUMAN_BEHAVIOUR,
                description="d",
                url="https://x.org/m.csv",
            )
        ]
        with pytest.raises(EmptyPlan):
            plan_experiment(mobile_money, cards, SnippetPool(64), backend, embedder)

    def test_phase_snippet_annotation(self, mobile_money, embedder, mock_provider):
        pool = SnippetPool(dimension=64)
        pool.index_snippet(_snippet(0, ("profiling", "summary")), embedder)
        pool.index_snippet(_snippet(1, ("regression", "estimation")), embedder)
        cards = [
            DataCard(
                id="c1",
                name="mobility",
                category=DataCategory.HUMAN_BEHAVIOUR,
                description="mobility",
                url="https://x.org/m.csv",
            )
        ]
        plan = plan_experiment(mobile_money, cards, pool, mock_provider, embedder)
        assert set(plan.retrieved_snippets) == {p.name for p in plan.phases}
        for ids in plan.retrieved_snippets.values():
            assert ids  # every phase lists supporting snippets


class TestGenerateScript:
    def test_default_mock_script_runs_inputs(self, mock_provider):
        plan = parse_plan(
            {"AnalyzingAgentPlan": {"DataProcessing": {"tasks": ["profile tables"]}}}
        )
        script = generate_script(
            plan.phases[0], [], "python", mock_provider, available_inputs=("a.csv",)
        )
        assert script.language_tag == "python"
        assert script.inputs == ("a.csv",)
        assert "summary.json" in script.outputs

    def test_snippetless_phase_still_produces_script(self, mock_provider):
        plan = parse_plan({"AnalyzingAgentPlan": {"P": {"tasks": ["t"]}}})
        script = generate_script(plan.phases[0], [], "python", mock_provider)
        assert script.body.strip()

    def test_identical_calls_identical_digest(self, mobile_money):
        plan = parse_plan({"AnalyzingAgentPlan": {"P": {"tasks": ["t"]}}})
        a = generate_script(plan.phases[0], [], "python", MockBackend(seed=1), seed=5)
        b = generate_script(plan.phases[0], [], "python", MockBackend(seed=1), seed=5)
        assert a.script_id == b.script_id
        assert a.body == b.body

    def test_stray_inputs_rejected_after_reprompts(self):
        bad = json.dumps({"Language": "python", "Body": "print(1)", "Inputs": ["ghost.csv"]})
        backend = MockBackend(use_default=False).script(bad, bad, bad)
        plan = parse_plan({"AnalyzingAgentPlan": {"P": {"tasks": ["t"]}}})
        with pytest.raises(ProviderFailure):
            generate_script(plan.phases[0], [], "python", backend, available_inputs=())


class TestExecute:
    def test_ok_script(self, tmp_path):
        record = execute(script_artifact('print("ok")\n', "python"), _sandbox(tmp_path))
        assert record.exit_status == 0
        assert record.stdout == "ok\n"
        assert record.timed_out is False

    def test_timeout_two_seconds(self, tmp_path):
        record = execute(
            script_artifact("while True:\n    pass\n", "python"),
            _sandbox(tmp_path, limit=2.0),
        )
        assert record.timed_out is True
        assert classify_error(record) is ErrorClass.TIMEOUT
        assert abs(record.duration - 2.0) < 0.5

    def test_unknown_language_tag(self, tmp_path):
        with pytest.raises(UnknownLanguageTag):
            execute(script_artifact("x", "fortran"), _sandbox(tmp_path))

    def test_artifacts_are_work_dir_relative(self, tmp_path):
        body = 'with open("out.txt", "w") as fh:\n    fh.write("hello")\n'
        record = execute(script_artifact(body, "python"), _sandbox(tmp_path))
        assert [a.path for a in record.artifacts] == ["out.txt"]
        assert record.artifacts[0].digest == hashlib.sha256(b"hello").hexdigest()

    def test_isolation_out_of_tree_writes_never_in_artifacts(self, tmp_path):
        body = (
            'with open("../escaped.txt", "w") as fh:\n'
            '    fh.write("leak")\n'
            'with open("inside.txt", "w") as fh:\n'
            '    fh.write("fine")\n'
        )
        record = execute(script_artifact(body, "python"), _sandbox(tmp_path))
        paths = [a.path for a in record.artifacts]
        assert paths == ["inside.txt"]
        assert not any(".." in p or p.startswith("/") for p in paths)

    def test_env_allowlist_filters_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("URBANLAB_SECRET", "sensitive")
        body = 'import os\nprint("URBANLAB_SECRET" in os.environ)\n'
        record = execute(script_artifact(body, "python"), _sandbox(tmp_path))
        assert record.stdout == "False\n"

    def test_staged_inputs_available(self, tmp_path):
        source = tmp_path / "data.csv"
        source.write_text("a,b\n1,2\n")
        body = 'print(open("data.csv").read().strip())\n'
        record = execute(
            script_artifact(body, "python"),
            _sandbox(tmp_path),
            stage_files={"data.csv": source},
        )
        assert record.exit_status == 0
        assert "1,2" in record.stdout
        assert all(a.path != "data.csv" for a in record.artifacts)

    def test_output_cap_truncates(self, tmp_path):
        sandbox = _sandbox(tmp_path).model_copy(update={"output_byte_cap": 100})
        record = execute(script_artifact('print("y" * 10000)\n', "python"), sandbox)
        assert record.stdout.endswith("...[truncated]")
        assert len(record.stdout) < 200


# Fault-injection corpus: (name, broken body, expected class, fixed body or None)
FIXTURES: list[tuple[str, str, ErrorClass, str | None]] = [
    ("syntax-colon", "def broken(:\n    pass\n", ErrorClass.SYNTAX, "def broken():\n    pass\nprint('ok')\n"),
    ("syntax-paren", "print('unclosed'\n", ErrorClass.SYNTAX, "print('unclosed')\n"),
    (
        "dep-import",
        "import nonexistent_module_xyz\n",
        ErrorClass.MISSING_DEPENDENCY,
        "print('no dependency needed')\n",
    ),
    (
        "dep-from",
        "from another_missing_pkg import thing\n",
        ErrorClass.MISSING_DEPENDENCY,
        "thing = 1\nprint(thing)\n",
    ),
    (
        "fnf-open",
        "open('/definitely/absent/input.txt')\n",
        ErrorClass.FILE_NOT_FOUND,
        "print('skipping absent input')\n",
    ),
    (
        "fnf-path",
        "from pathlib import Path\nPath('missing_table.csv').read_text()\n",
        ErrorClass.FILE_NOT_FOUND,
        "from pathlib import Path\nPath('missing_table.csv').write_text('a\\n1\\n')\nprint('created')\n",
    ),
    (
        "shape-key",
        "row = {'a': 1}\nprint(row['population'])\n",
        ErrorClass.DATA_SHAPE,
        "row = {'a': 1}\nprint(row.get('population', 0))\n",
    ),
    (
        "shape-index",
        "values = [1, 2]\nprint(values[10])\n",
        ErrorClass.DATA_SHAPE,
        "values = [1, 2]\nprint(values[-1])\n",
    ),
    ("runtime-raise", "raise RuntimeError('boom')\n", ErrorClass.RUNTIME_OTHER, "print('recovered')\n"),
    ("runtime-div", "print(1 / 0)\n", ErrorClass.RUNTIME_OTHER, None),  # patcher echoes -> exhausted
    (
        "timeout-loop",
        "while True:\n    pass\n",
        ErrorClass.TIMEOUT,
        "for _ in range(3):\n    pass\nprint('bounded')\n",
    ),
    ("timeout-sleep", "import time\ntime.sleep(60)\n", ErrorClass.TIMEOUT, "UNPATCHABLE"),
]


class ScriptedPatcher:
    """Deterministic patcher: maps each broken body to its fix, echoes otherwise."""

    def __init__(self) -> None:
        self.fixes = {broken: fixed for _, broken, _, fixed in FIXTURES}

    def generate(self, req: CompletionRequest, prompt: str) -> str:
        body = str(req.bindings["body"])
        fixed = self.fixes.get(body)
        if fixed == "UNPATCHABLE":
            return json.dumps({"Action": "unpatchable", "Summary": "cannot be repaired"})
        if fixed is None:
            return json.dumps({"Action": "patch", "Body": body, "Summary": "echo"})
        return json.dumps({"Action": "patch", "Body": fixed, "Summary": "scripted fix"})


class TestClassification:
    @pytest.mark.parametrize("name,body,expected,_fix", FIXTURES, ids=[f[0] for f in FIXTURES])
    def test_fixture_corpus_classification(self, tmp_path, name, body, expected, _fix):
        limit = 1.0 if expected is ErrorClass.TIMEOUT else 20.0
        record = execute(script_artifact(body, "python"), _sandbox(tmp_path, limit=limit))
        assert record.exit_status != 0 or record.timed_out
        assert classify_error(record) is expected
        # determinism
        assert classify_error(record) is expected

    def test_clean_exit_violates_precondition(self, tmp_path):
        record = execute(script_artifact("print('fine')\n", "python"), _sandbox(tmp_path))
        with pytest.raises(IllegalState):
            classify_error(record)


class TestDebugLoop:
    def test_syntax_fix_succeeds_in_two_attempts(self, tmp_path):
        script = script_artifact(FIXTURES[0][1], "python")
        record, trace = debug_loop(script, _sandbox(tmp_path), ScriptedPatcher(), max_attempts=5)
        assert trace.outcome == "success"
        assert len(trace.attempts) == 2
        assert record.exit_status == 0
        assert trace.attempts[0].diagnosis is ErrorClass.SYNTAX
        assert trace.attempts[0].patch_summary == "scripted fix"

    def test_echo_patcher_exhausts_budget(self, tmp_path):
        script = script_artifact("print(1 / 0)\n", "python")
        record, trace = debug_loop(script, _sandbox(tmp_path), ScriptedPatcher(), max_attempts=3)
        assert trace.outcome == "exhausted"
        assert len(trace.attempts) == 3
        assert record.exit_status != 0

    def test_already_correct_single_attempt(self, tmp_path):
        script = script_artifact("print('already fine')\n", "python")
        record, trace = debug_loop(script, _sandbox(tmp_path), ScriptedPatcher(), max_attempts=5)
        assert trace.outcome == "success"
        assert len(trace.attempts) == 1
        assert trace.attempts[0].patch_summary == ""
        assert trace.attempts[0].diagnosis is None

    def test_unpatchable_declaration_stops_loop(self, tmp_path):
        script = script_artifact(FIXTURES[11][1], "python")
        sandbox = _sandbox(tmp_path, limit=1.0)
        record, trace = debug_loop(script, sandbox, ScriptedPatcher(), max_attempts=5)
        assert trace.outcome == "unpatchable"
        assert len(trace.attempts) == 1
        assert trace.attempts[0].diagnosis is ErrorClass.TIMEOUT

    def test_provider_failure_carries_partial_trace(self, tmp_path):
        script = script_artifact("raise RuntimeError('x')\n", "python")
        backend = MockBackend(use_default=False)
        with pytest.raises(ProviderFailure) as excinfo:
            debug_loop(script, _sandbox(tmp_path), backend, max_attempts=4)
        assert len(excinfo.value.partial_trace.attempts) == 1


class TestSimulator:
    def test_toy_simulator_matches_in_process_oracle(self, tmp_path):
        adapter = toy_diffusion_adapter()
        dataset = run_simulation(
            adapter, {"steps": 10, "seed": 7}, _sandbox(tmp_path), tmp_path / "out"
        )
        produced = open(dataset.path).read()
        expected_rows = simulate(10, 7)
        expected = "step,core,fringe\n" + "".join(
            f"{s},{c:.8f},{f:.8f}\n" for s, c, f in expected_rows
        )
        assert produced == expected
        assert produced.count("\n") == 11  # header + 10 rows

    def test_negative_steps_rejected(self, tmp_path):
        with pytest.raises(SchemaViolation):
            run_simulation(
                toy_diffusion_adapter(), {"steps": -1, "seed": 0}, _sandbox(tmp_path), tmp_path
            )

    def test_unknown_param_rejected(self):
        with pytest.raises(SchemaViolation):
            validate_params(toy_diffusion_adapter(), {"steps": 5, "seed": 0, "warp": 9})

    def test_missing_param_rejected(self):
        with pytest.raises(SchemaViolation):
            validate_params(toy_diffusion_adapter(), {"steps": 5})

    def test_same_params_identical_digest(self, tmp_path):
        adapter = toy_diffusion_adapter()
        a = run_simulation(adapter, {"steps": 6, "seed": 3}, _sandbox(tmp_path / "1"), tmp_path / "o1")
        b = run_simulation(adapter, {"steps": 6, "seed": 3}, _sandbox(tmp_path / "2"), tmp_path / "o2")
        assert a.digest == b.digest

    def test_simulator_failure_surfaces(self, tmp_path):
        adapter = toy_diffusion_adapter().model_copy(
            update={"params": {"steps": None or {}}}  # placeholder replaced below
        )
        # bad config (steps missing from file) -> nonzero exit
        from urbanlab.analysis.simulator import ParamSpec, SimulatorAdapter

        broken = SimulatorAdapter(
            name="toy_diffusion",
            params={"seed": ParamSpec(type="int", minimum=0, maximum=10)},
            command=toy_diffusion_adapter().command,
            output_file="output.csv",
        )
        with pytest.raises(SimulatorFailure):
            run_simulation(broken, {"seed": 1}, _sandbox(tmp_path), tmp_path / "o")
