"""Directory-per-run persistence: append-only event log + content-addressed blobs.

Layout::

    <root>/<run_id>/
        config.json      # config snapshot, schema-versioned
        events.log       # one JSON event per line, append-only
        artifacts/       # blobs named by their sha256 digest
        report.md        # written by the Writing stage
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any

from filelock import FileLock

from urbanlab.errors import CorruptLog, UnknownRun
from urbanlab.orchestrator.events import SCHEMA_VERSION, StageEvent


class RunStore:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def exists(self, run_id: str) -> bool:
        return (self.run_dir(run_id) / "config.json").is_file()

    def run_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "config.json").is_file()
        )

    def lock(self, run_id: str) -> FileLock:
        """Per-run exclusive lease serializing advance/gate mutations."""
        return FileLock(str(self.run_dir(run_id) / ".lease"))

    # -- lifecycle ------------------------------------------------------------

    def create_run(self, run_id: str, config: dict[str, Any]) -> None:
        run_dir = self.run_dir(run_id)
        (run_dir / "artifacts").mkdir(parents=True, exist_ok=True)
        snapshot = {"schema_version": SCHEMA_VERSION, **config}
        (run_dir / "config.json").write_text(
            json.dumps(snapshot, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        (run_dir / "events.log").touch()

    def config(self, run_id: str) -> dict[str, Any]:
        if not self.exists(run_id):
            raise UnknownRun(f"no run {run_id!r}")
        return json.loads((self.run_dir(run_id) / "config.json").read_text(encoding="utf-8"))

    # -- events -----------------------------------------------------------------

    def append_event(self, run_id: str, event: StageEvent) -> None:
        line = json.dumps(event.model_dump(mode="json"), ensure_ascii=False)
        with (self.run_dir(run_id) / "events.log").open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def events(self, run_id: str) -> list[StageEvent]:
        if not self.exists(run_id):
            raise UnknownRun(f"no run {run_id!r}")
        events: list[StageEvent] = []
        path = self.run_dir(run_id) / "events.log"
        for n, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
            if not line.strip():
                continue
            try:
                events.append(StageEvent(**json.loads(line)))
            except Exception as exc:
                raise CorruptLog(f"unreadable event at line {n}: {exc}") from exc
        return events

    # -- artifacts ------------------------------------------------------------------

    def put_artifact(self, run_id: str, payload: bytes) -> str:
        digest = hashlib.sha256(payload).hexdigest()
        path = self.run_dir(run_id) / "artifacts" / digest
        if not path.exists():
            path.write_bytes(payload)
        return digest

    def put_json_artifact(self, run_id: str, document: Any) -> str:
        return self.put_artifact(
            run_id,
            (json.dumps(document, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode(
                "utf-8"
            ),
        )

    def artifact_path(self, run_id: str, digest: str) -> Path:
        return self.run_dir(run_id) / "artifacts" / digest

    def get_artifact(self, run_id: str, digest: str) -> bytes:
        path = self.artifact_path(run_id, digest)
        try:
            return path.read_bytes()
        except OSError as exc:
            raise UnknownRun(f"missing artifact {digest} in run {run_id}: {exc}") from exc

    def get_json_artifact(self, run_id: str, digest: str) -> Any:
        return json.loads(self.get_artifact(run_id, digest).decode("utf-8"))

    def artifact_digests(self, run_id: str) -> list[str]:
        art_dir = self.run_dir(run_id) / "artifacts"
        if not art_dir.is_dir():
            return []
        return sorted(p.name for p in art_dir.iterdir() if p.is_file())

    # -- report ------------------------------------------------------------------

    def write_report(self, run_id: str, text: str) -> Path:
        path = self.run_dir(run_id) / "report.md"
        path.write_text(text, encoding="utf-8")
        return path

    def read_report(self, run_id: str) -> str:
        path = self.run_dir(run_id) / "report.md"
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UnknownRun(f"run {run_id} has no report yet") from exc


class HypothesisStore:
    """Project-level hypothesis collection: one canonical document per id."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, hypothesis_id: str) -> Path:
        return self.root / f"{hypothesis_id}.json"

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))

    def exists(self, hypothesis_id: str) -> bool:
        return self._path(hypothesis_id).is_file()

    def save(self, document_text: str, hypothesis_id: str) -> None:
        self._path(hypothesis_id).write_text(document_text + "\n", encoding="utf-8")

    def load_text(self, hypothesis_id: str) -> str:
        try:
            return self._path(hypothesis_id).read_text(encoding="utf-8")
        except OSError as exc:
            raise UnknownRun(f"no hypothesis {hypothesis_id!r}") from exc
