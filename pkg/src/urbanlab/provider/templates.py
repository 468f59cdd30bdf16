"""Versioned prompt-template store.

Templates are plain text files named ``<template_id>.txt`` with ``{{name}}``
placeholders.  An optional first line ``#version: N`` is stripped and
recorded.  The packaged directory ships the engine's defaults; a custom
directory can override or extend it.
"""

from __future__ import annotations

import json
import re
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from urbanlab.errors import SchemaViolation

_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")
_VERSION_RE = re.compile(r"^#version:\s*(\d+)\s*$")


class TemplateStore:
    _default: "TemplateStore | None" = None

    def __init__(self, directory: str | Path | None = None) -> None:
        self._templates: dict[str, str] = {}
        self._versions: dict[str, int] = {}
        self._load_packaged()
        if directory is not None:
            self._load_directory(Path(directory))

    @classmethod
    def default(cls) -> "TemplateStore":
        if cls._default is None:
            cls._default = cls()
        return cls._default

    def _load_packaged(self) -> None:
        root = resources.files("urbanlab").joinpath("templates")
        for entry in root.iterdir():
            if entry.name.endswith(".txt"):
                self._register(entry.name[: -len(".txt")], entry.read_text(encoding="utf-8"))

    def _load_directory(self, directory: Path) -> None:
        for path in sorted(directory.glob("*.txt")):
            self._register(path.stem, path.read_text(encoding="utf-8"))

    def _register(self, template_id: str, body: str) -> None:
        version = 1
        lines = body.split("\n", 1)
        match = _VERSION_RE.match(lines[0]) if lines else None
        if match:
            version = int(match.group(1))
            body = lines[1] if len(lines) > 1 else ""
        self._templates[template_id] = body
        self._versions[template_id] = version

    def ids(self) -> list[str]:
        return sorted(self._templates)

    def version(self, template_id: str) -> int:
        return self._versions[template_id]

    def placeholders(self, template_id: str) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.body(template_id)))

    def body(self, template_id: str) -> str:
        try:
            return self._templates[template_id]
        except KeyError:
            raise SchemaViolation(f"unknown template id {template_id!r}") from None

    def render(self, template_id: str, bindings: Mapping[str, Any]) -> str:
        body = self.body(template_id)
        needed = self.placeholders(template_id)
        missing = needed - set(bindings)
        if missing:
            raise SchemaViolation(
                f"template {template_id!r} has unbound placeholder(s): "
                + ", ".join(sorted(missing))
            )

        def _sub(match: re.Match[str]) -> str:
            value = bindings[match.group(1)]
            if isinstance(value, str):
                return value
            return json.dumps(value, ensure_ascii=False, sort_keys=True)

        return _PLACEHOLDER_RE.sub(_sub, body)
