"""Sandboxed script execution and failure classification.

Scripts run in per-attempt work directories with an allowlisted environment
and a wall-clock limit.  Interpreter commands are pure configuration — the
engine never hardcodes a toolchain.  The artifact scan only ever walks the
work directory, so out-of-tree writes can never appear in the record.
"""

from __future__ import annotations

import hashlib
import os
import re
import subprocess
import time
from enum import Enum
from pathlib import Path
from typing import Mapping

from pydantic import BaseModel, ConfigDict, Field

from urbanlab.errors import IllegalState, SandboxSetupFailure, UnknownLanguageTag

OUTPUT_BYTE_CAP = 1024 * 1024
TRUNCATION_MARKER = "\n...[truncated]"
TIMEOUT_EXIT_STATUS = 124

_EXTENSIONS = {"python": ".py", "r": ".R", "sh": ".sh", "bash": ".sh"}


class SandboxConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    work_root: str
    interpreters: dict[str, tuple[str, ...]]
    wall_clock_limit: float = Field(default=30.0, gt=0)
    env_allowlist: tuple[str, ...] = ("PATH", "HOME", "LANG", "LC_ALL", "PYTHONIOENCODING")
    output_byte_cap: int = Field(default=OUTPUT_BYTE_CAP, gt=0)


class ScriptArtifact(BaseModel):
    model_config = ConfigDict(frozen=True)

    script_id: str
    language_tag: str
    body: str
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()


def script_artifact(
    body: str,
    language_tag: str,
    inputs: tuple[str, ...] = (),
    outputs: tuple[str, ...] = (),
) -> ScriptArtifact:
    digest = hashlib.sha256(f"{language_tag}\n{body}".encode("utf-8")).hexdigest()[:16]
    return ScriptArtifact(
        script_id=f"s-{digest}",
        language_tag=language_tag,
        body=body,
        inputs=inputs,
        outputs=outputs,
    )


class FileDigest(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str  # relative to the work dir
    digest: str


class ExecutionRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    script_id: str
    attempt: int = Field(ge=1)
    exit_status: int
    stdout: str
    stderr: str
    duration: float = Field(ge=0)
    artifacts: tuple[FileDigest, ...] = ()
    timed_out: bool = False
    work_dir: str = ""

    def to_artifact_document(self) -> dict[str, object]:
        """Deterministic view for content-addressed storage (drops wall-clock
        duration and machine-local paths)."""
        return {
            "script_id": self.script_id,
            "attempt": self.attempt,
            "exit_status": self.exit_status,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "artifacts": [{"path": a.path, "digest": a.digest} for a in self.artifacts],
            "timed_out": self.timed_out,
        }


def _cap(text: str, cap: int) -> str:
    data = text.encode("utf-8", errors="replace")
    if len(data) <= cap:
        return text
    return data[:cap].decode("utf-8", errors="replace") + TRUNCATION_MARKER


def execute(
    script: ScriptArtifact,
    sandbox: SandboxConfig,
    stage_files: Mapping[str, str | Path] | None = None,
    attempt: int = 1,
) -> ExecutionRecord:
    """Run one script in an isolated per-attempt work dir and record the outcome."""
    if script.language_tag not in sandbox.interpreters:
        raise UnknownLanguageTag(
            f"no interpreter configured for language tag {script.language_tag!r}"
        )
    command = list(sandbox.interpreters[script.language_tag])

    work_dir = Path(sandbox.work_root) / f"{script.script_id}-a{attempt}"
    try:
        work_dir.mkdir(parents=True, exist_ok=True)
        staged: set[str] = set()
        for name, source in (stage_files or {}).items():
            dest = work_dir / name
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(Path(source).read_bytes())
            staged.add(str(Path(name)))
        script_name = "script" + _EXTENSIONS.get(script.language_tag, ".txt")
        (work_dir / script_name).write_text(script.body, encoding="utf-8")
    except OSError as exc:
        raise SandboxSetupFailure(f"cannot prepare work dir {work_dir}: {exc}") from exc

    env = {k: os.environ[k] for k in sandbox.env_allowlist if k in os.environ}
    started = time.monotonic()
    timed_out = False
    try:
        proc = subprocess.run(
            command + [script_name],
            cwd=work_dir,
            env=env,
            capture_output=True,
            timeout=sandbox.wall_clock_limit,
        )
        exit_status = proc.returncode
        stdout_b, stderr_b = proc.stdout, proc.stderr
    except subprocess.TimeoutExpired as exc:
        timed_out = True
        exit_status = TIMEOUT_EXIT_STATUS
        stdout_b = exc.stdout or b""
        stderr_b = exc.stderr or b""
    except OSError as exc:
        raise SandboxSetupFailure(f"cannot launch {command!r}: {exc}") from exc
    duration = time.monotonic() - started

    artifacts: list[FileDigest] = []
    for path in sorted(work_dir.rglob("*")):
        if not path.is_file():
            continue
        rel = str(path.relative_to(work_dir))
        if rel == script_name or rel in staged:
            continue
        artifacts.append(
            FileDigest(path=rel, digest=hashlib.sha256(path.read_bytes()).hexdigest())
        )

    return ExecutionRecord(
        script_id=script.script_id,
        attempt=attempt,
        exit_status=exit_status,
        stdout=_cap(stdout_b.decode("utf-8", errors="replace"), sandbox.output_byte_cap),
        stderr=_cap(stderr_b.decode("utf-8", errors="replace"), sandbox.output_byte_cap),
        duration=duration,
        artifacts=tuple(artifacts),
        timed_out=timed_out,
        work_dir=str(work_dir),
    )


# ---------------------------------------------------------------------------
# Failure classification
# ---------------------------------------------------------------------------


class ErrorClass(str, Enum):
    SYNTAX = "syntax"
    MISSING_DEPENDENCY = "missing_dependency"
    DATA_SHAPE = "data_shape"
    FILE_NOT_FOUND = "file_not_found"
    RUNTIME_OTHER = "runtime_other"
    TIMEOUT = "timeout"


# Ordered pattern rules over stderr; first hit wins, fallback is runtime_other.
_CLASS_RULES: tuple[tuple[ErrorClass, re.Pattern[str]], ...] = (
    (
        ErrorClass.SYNTAX,
        re.compile(r"SyntaxError|IndentationError|invalid syntax|unexpected EOF|unexpected indent"),
    ),
    (
        ErrorClass.MISSING_DEPENDENCY,
        re.compile(
            r"ModuleNotFoundError|No module named|ImportError|cannot import name"
            r"|there is no package called|command not found"
        ),
    ),
    (
        ErrorClass.FILE_NOT_FOUND,
        re.compile(r"FileNotFoundError|No such file or directory|\[Errno 2\]|cannot open file"),
    ),
    (
        ErrorClass.DATA_SHAPE,
        re.compile(
            r"KeyError|IndexError|could not broadcast|not aligned|shape mismatch"
            r"|wrong number of (items|columns)|Length mismatch|dimension"
        ),
    ),
)


def classify_error(record: ExecutionRecord) -> ErrorClass:
    """Total deterministic mapping from a failed record to an error class."""
    if record.exit_status == 0 and not record.timed_out:
        raise IllegalState("classify_error requires a failed execution record")
    if record.timed_out:
        return ErrorClass.TIMEOUT
    for error_class, pattern in _CLASS_RULES:
        if pattern.search(record.stderr):
            return error_class
    return ErrorClass.RUNTIME_OTHER
