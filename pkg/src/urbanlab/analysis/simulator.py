"""Simulator adapters: schema-validated configs in, tabular datasets out.

When empirical data are missing or unsuitable, a plan can fall back to a
registered simulator.  The adapter writes a key=value config file, runs the
simulator command in the sandbox, and registers its output table as a
local dataset usable by preprocessing.
"""

from __future__ import annotations

import hashlib
import sys
from pathlib import Path
from typing import Any, Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field

from urbanlab.analysis.sandbox import SandboxConfig, ScriptArtifact, execute
from urbanlab.datapool.fetch import LocalDataset, store_payload
from urbanlab.errors import SchemaViolation, SimulatorFailure


class ParamSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["int", "float", "str"]
    minimum: float | None = None
    maximum: float | None = None
    choices: tuple[str, ...] | None = None


class SimulatorAdapter(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    params: dict[str, ParamSpec]
    command: tuple[str, ...]
    output_file: str = "output.csv"
    language_tag: str = "sim"


def validate_params(adapter: SimulatorAdapter, params: Mapping[str, Any]) -> dict[str, Any]:
    unknown = set(params) - set(adapter.params)
    if unknown:
        raise SchemaViolation(
            f"unknown parameter(s) for {adapter.name}: {', '.join(sorted(unknown))}"
        )
    validated: dict[str, Any] = {}
    for name, spec in adapter.params.items():
        if name not in params:
            raise SchemaViolation(f"missing parameter {name!r} for {adapter.name}")
        value = params[name]
        try:
            if spec.type == "int":
                value = int(value)
            elif spec.type == "float":
                value = float(value)
            else:
                value = str(value)
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"parameter {name!r} is not a {spec.type}: {value!r}") from exc
        if spec.type in ("int", "float"):
            if spec.minimum is not None and value < spec.minimum:
                raise SchemaViolation(f"parameter {name!r}={value} below minimum {spec.minimum}")
            if spec.maximum is not None and value > spec.maximum:
                raise SchemaViolation(f"parameter {name!r}={value} above maximum {spec.maximum}")
        if spec.choices is not None and value not in spec.choices:
            raise SchemaViolation(f"parameter {name!r}={value!r} not in {spec.choices}")
        validated[name] = value
    return validated


def config_text(params: Mapping[str, Any]) -> str:
    return "".join(f"{key}={params[key]}\n" for key in sorted(params))


def run_simulation(
    adapter: SimulatorAdapter,
    params: Mapping[str, Any],
    sandbox: SandboxConfig,
    dest_dir: str | Path = "datasets",
) -> LocalDataset:
    """Validate params, run the simulator in the sandbox, register its table."""
    validated = validate_params(adapter, params)
    cfg = config_text(validated)

    sim_sandbox = sandbox.model_copy(
        update={"interpreters": {**sandbox.interpreters, adapter.language_tag: adapter.command}}
    )
    # the "script" slot carries the config file; the adapter command reads it
    cfg_digest = hashlib.sha256(cfg.encode("utf-8")).hexdigest()[:12]
    script = ScriptArtifact(
        script_id=f"sim-{adapter.name}-{cfg_digest}",
        language_tag=adapter.language_tag,
        body=cfg,
    )
    record = execute(script, sim_sandbox)
    if record.exit_status != 0 or record.timed_out:
        raise SimulatorFailure(
            f"simulator {adapter.name} exited {record.exit_status}: {record.stderr.strip()}"
        )
    output_path = Path(record.work_dir) / adapter.output_file
    if not output_path.is_file():
        raise SimulatorFailure(
            f"simulator {adapter.name} produced no {adapter.output_file}"
        )
    return store_payload(output_path.read_bytes(), dest_dir, suffix=Path(adapter.output_file).suffix or ".csv")


def toy_diffusion_adapter() -> SimulatorAdapter:
    """Bundled deterministic 1-D diffusion simulator (its own oracle in tests)."""
    return SimulatorAdapter(
        name="toy_diffusion",
        params={
            "steps": ParamSpec(type="int", minimum=1, maximum=100000),
            "seed": ParamSpec(type="int", minimum=0, maximum=2**31 - 1),
        },
        command=(sys.executable, "-m", "urbanlab.analysis.toy_simulator"),
        output_file="output.csv",
    )
