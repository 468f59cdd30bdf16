"""Deterministic scripted/templated completion backend for offline runs.

Resolution order per request: explicit response queue, then the
fingerprint-keyed response map, then the default templated responder.  The
default responder is a pure function of (template id, bindings, seed), so
identical requests always produce identical output — the whole engine is
byte-reproducible under this backend.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
from collections import deque
from pathlib import Path
from typing import Any, Mapping

from urbanlab.errors import ProviderFailure
from urbanlab.provider.base import CompletionRequest, fingerprint


def _short(text: str, limit: int = 72) -> str:
    text = " ".join(str(text).split())
    if len(text) <= limit:
        return text
    return text[:limit].rsplit(" ", 1)[0] + "..."


def _loads(value: Any) -> Any:
    if isinstance(value, str):
        return json.loads(value)
    return value


def _rng(req: CompletionRequest, backend_seed: int) -> random.Random:
    return random.Random(f"{backend_seed}:{req.seed}:{req.template_id}")


def _digest_bytes(*parts: Any) -> bytes:
    basis = json.dumps([str(p) for p in parts], sort_keys=True)
    return hashlib.sha256(basis.encode("utf-8")).digest()


# ---------------------------------------------------------------------------
# Default responders, one per template
# ---------------------------------------------------------------------------

_MEDIATORS = (
    "credit access among informal firms",
    "land-use conversion pressure near transit corridors",
    "household commuting time budgets",
    "local fiscal capacity and service provision",
    "housing search frictions in rental markets",
)

_IMPROVEMENTS = (
    "pre-register the measurement window and spatial unit",
    "add a falsification test on a placebo outcome",
    "benchmark the key variable against an administrative source",
    "stratify the analysis by settlement size",
)


def _respond_recombine(req: CompletionRequest, seed: int) -> str:
    pa = _loads(req.bindings["parent_a"])
    pb = _loads(req.bindings["parent_b"])
    pa_id, pb_id = pa.get("Id", "HA"), pb.get("Id", "HB")
    doc = {
        "Context": pa["Context"],
        "A": pa["A"],
        "B": pb["B"],
        "Mechanism": pb["Mechanism"],
        "Pattern": pa["Pattern"],
        "InnovationType": "Recombination",
        "Innovation rationale": (
            f"Combines {_short(pa['A'], 48)} (from {pa_id}) and "
            f"{_short(pb['Mechanism'], 48)} (from {pb_id})."
        ),
        "WhyItMatters": "Links two previously separate explanatory threads into one testable claim.",
        "Title": f"Recombined hypothesis: {_short(pa['A'], 40)} and {_short(pb['B'], 40)}",
        "Abstract": (
            f"We examine whether {_short(pa['A'], 60)} shapes {_short(pb['B'], 60)} "
            f"in {_short(pa['Context'], 60)}, through the pathway that {_short(pb['Mechanism'], 80)}"
        ),
        "Attribution": {
            "Context": pa_id,
            "A": pa_id,
            "B": pb_id,
            "Mechanism": pb_id,
            "Pattern": pa_id,
        },
    }
    return json.dumps(doc, ensure_ascii=False, indent=2)


def _respond_transform_mechanism(req: CompletionRequest, seed: int) -> str:
    parent = _loads(req.bindings["parent"])
    rng = _rng(req, seed)
    mediator = rng.choice(_MEDIATORS)
    doc = {
        "Context": parent["Context"],
        "A": parent["A"],
        "B": parent["B"],
        "Mechanism": (
            f"Conditional pathway: the link runs through {mediator}, "
            f"replacing the original channel ({_short(parent['Mechanism'], 80)})."
        ),
        "Pattern": parent["Pattern"],
        "InnovationType": "MechanismTransformation",
        "Innovation rationale": f"Substitutes the causal channel with mediation via {mediator}.",
        "WhyItMatters": "Separates competing causal stories that predict the same surface pattern.",
        "Title": f"{parent.get('Title') or 'Mechanism variant'} (mechanism re-specified)",
        "Abstract": parent.get("Abstract", ""),
    }
    return json.dumps(doc, ensure_ascii=False, indent=2)


def _respond_transfer_context(req: CompletionRequest, seed: int) -> str:
    parent = _loads(req.bindings["parent"])
    target = str(req.bindings["target_context"])
    doc = {
        "Context": target,
        "A": parent["A"],
        "B": parent["B"],
        "Mechanism": parent["Mechanism"],
        "Pattern": parent["Pattern"],
        "InnovationType": "ContextTransfer",
        "Innovation rationale": (
            f"Migrates the hypothesis from '{_short(parent['Context'], 60)}' to '{_short(target, 60)}'."
        ),
        "WhyItMatters": "Tests whether the relationship generalizes beyond its original setting.",
        "Title": f"{parent.get('Title') or 'Transferred hypothesis'} (transferred)",
        "Abstract": parent.get("Abstract", ""),
    }
    return json.dumps(doc, ensure_ascii=False, indent=2)


def _respond_generate_meta(req: CompletionRequest, seed: int) -> str:
    parents = [_loads(p) if isinstance(p, str) else p for p in _loads(req.bindings["parents"])]
    contexts = "; ".join(_short(p["Context"], 48) for p in parents)
    doc = {
        "Context": f"Cross-context synthesis spanning: {contexts}",
        "A": "Contextual moderators (regional, institutional, and temporal setting)",
        "B": f"Stability of the shared causal effect: {_short(parents[0]['Mechanism'], 64)}",
        "Mechanism": (
            "If the underlying pathway is structural rather than context-bound, its "
            "effect direction persists across settings while its magnitude tracks "
            "measured contextual moderators."
        ),
        "Pattern": (
            "Concordant effect signs across contexts, with magnitude heterogeneity "
            "explained by the measured moderators."
        ),
        "InnovationType": "MetaHypothesis",
        "Innovation rationale": "Elevates related variants into a question about mechanism validity across settings.",
        "WhyItMatters": "Distinguishes portable urban mechanisms from context-specific artifacts.",
        "Title": "Does the mechanism travel? A cross-context meta-hypothesis",
        "Abstract": (
            f"We ask whether the mechanism shared by {len(parents)} related hypotheses "
            "holds across their distinct settings, and what moderates its strength."
        ),
    }
    return json.dumps(doc, ensure_ascii=False, indent=2)


def _respond_persona_turn(req: CompletionRequest, seed: int) -> str:
    h = _loads(req.bindings["hypothesis"])
    rng = _rng(req, seed)
    improvement = rng.choice(_IMPROVEMENTS)
    return (
        f"[{req.bindings['persona_name']}, {req.bindings['discipline']}] "
        f"Round {req.bindings['round']}: the weakest assumption is that the pattern "
        f"'{_short(h['Pattern'], 64)}' is identified by the stated design alone. "
        f"Concrete improvement: {improvement}."
    )


def _respond_synthesize_revision(req: CompletionRequest, seed: int) -> str:
    h = _loads(req.bindings["hypothesis"])
    iteration = int(req.bindings["iteration"])
    doc = {
        "Context": h["Context"],
        "A": h["A"],
        "B": h["B"],
        "Mechanism": h["Mechanism"],
        "Pattern": f"{h['Pattern']} [panel-refined i{iteration}]",
    }
    for key in ("InnovationType", "Innovation rationale", "WhyItMatters", "Title", "Abstract"):
        if h.get(key) not in (None, ""):
            doc[key] = h[key]
    return json.dumps(doc, ensure_ascii=False, indent=2)


def _respond_critique(req: CompletionRequest, seed: int) -> str:
    subject = str(req.bindings["subject"])
    d = _digest_bytes("critique", subject, req.seed, seed)
    doc = {
        "Rating": 5.0 + (d[3] % 17) * 0.25,
        "Soundness": 2.0 + (d[0] % 9) * 0.25,
        "Presentation": 2.0 + (d[1] % 9) * 0.25,
        "Contribution": 2.0 + (d[2] % 9) * 0.25,
        "Summary": "Automated panel assessment of conceptual and empirical soundness.",
        "Strengths": [
            "Variables are concretely measurable at the stated spatial unit.",
            "The predicted pattern is falsifiable within the observation window.",
        ],
        "Weaknesses": [
            "Observational design limits causal identification of the stated mechanism.",
        ],
        "Suggestions": [
            "Add robustness checks across alternative variable definitions.",
        ],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2)


def _respond_extract_cards(req: CompletionRequest, seed: int) -> str:
    return json.dumps({"Cards": []})


def _respond_classify_card(req: CompletionRequest, seed: int) -> str:
    d = _digest_bytes("classify", req.bindings["description"], seed)
    categories = ("StatisticalInfrastructure", "HumanBehaviour", "PolicySurvey", "MultimodalSensing")
    return categories[d[0] % 4]


def _respond_plan_experiment(req: CompletionRequest, seed: int) -> str:
    h = _loads(req.bindings["hypothesis"])
    cards = _loads(req.bindings["cards"])
    names = ", ".join(c.get("Name", "dataset") for c in cards) or "matched datasets"
    plan = {
        "AnalyzingAgentPlan": {
            "Phase1_DataPreparation": {
                "tasks": [
                    f"Profile input datasets: {names}",
                    "Construct an analysis table with aligned spatial and temporal index",
                ]
            },
            "Phase2_EmpiricalTest": {
                "tasks": [
                    f"Estimate the association between {_short(h['A'], 56)} and {_short(h['B'], 56)}",
                    "Summarize effect direction, magnitude, and fit diagnostics",
                ]
            },
        }
    }
    return json.dumps(plan, ensure_ascii=False, indent=2)


_SCRIPT_TEMPLATE = '''import csv
import json
import os
import sys

INPUTS = {inputs}

summary = {{}}
for path in INPUTS:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        print(f"cannot read {{path}}: {{exc}}", file=sys.stderr)
        sys.exit(1)
    summary[os.path.basename(path)] = {{
        "rows": max(len(rows) - 1, 0),
        "cols": len(rows[0]) if rows else 0,
    }}

with open("summary.json", "w", encoding="utf-8") as fh:
    json.dump(summary, fh, indent=2, sort_keys=True)

print("PHASE {phase} OK")
print(json.dumps(summary, sort_keys=True))
'''


def _respond_generate_script(req: CompletionRequest, seed: int) -> str:
    inputs = list(_loads(req.bindings["inputs"]))
    body = _SCRIPT_TEMPLATE.format(
        inputs=json.dumps(sorted(inputs)), phase=req.bindings["phase_name"]
    )
    doc = {
        "Language": str(req.bindings["language"]),
        "Body": body,
        "Inputs": sorted(inputs),
        "Outputs": ["summary.json"],
    }
    return json.dumps(doc, ensure_ascii=False)


def _respond_patch_script(req: CompletionRequest, seed: int) -> str:
    return json.dumps(
        {
            "Action": "patch",
            "Body": str(req.bindings["body"]),
            "Summary": "resubmitted unchanged",
        }
    )


_DEFAULT_RESPONDERS = {
    "recombine": _respond_recombine,
    "transform_mechanism": _respond_transform_mechanism,
    "transfer_context": _respond_transfer_context,
    "generate_meta": _respond_generate_meta,
    "persona_turn": _respond_persona_turn,
    "synthesize_revision": _respond_synthesize_revision,
    "critique": _respond_critique,
    "extract_cards": _respond_extract_cards,
    "classify_card": _respond_classify_card,
    "plan_experiment": _respond_plan_experiment,
    "generate_script": _respond_generate_script,
    "patch_script": _respond_patch_script,
}


class MockBackend:
    """Scripted + templated completion backend (see module docstring)."""

    def __init__(self, seed: int = 0, use_default: bool = True) -> None:
        self.seed = int(seed)
        self.use_default = use_default
        self._queue: deque[str] = deque()
        self._responses: dict[str, str] = {}
        self._lock = threading.Lock()  # backends are shareable handles
        self.calls: list[tuple[str, str]] = []

    # -- scripting ----------------------------------------------------------

    def script(self, *responses: Any) -> "MockBackend":
        """Queue responses consumed in order, ahead of any other resolution."""
        for r in responses:
            self._queue.append(r if isinstance(r, str) else json.dumps(r, ensure_ascii=False))
        return self

    def script_for(self, req_or_fingerprint: CompletionRequest | str, response: Any) -> "MockBackend":
        fp = (
            req_or_fingerprint
            if isinstance(req_or_fingerprint, str)
            else fingerprint(req_or_fingerprint)
        )
        self._responses[fp] = (
            response if isinstance(response, str) else json.dumps(response, ensure_ascii=False)
        )
        return self

    @classmethod
    def from_script_file(cls, path: str | Path, seed: int = 0, use_default: bool = True) -> "MockBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        backend = cls(seed=data.get("seed", seed), use_default=data.get("use_default", use_default))
        backend.script(*data.get("queue", ()))
        for fp, response in data.get("responses", {}).items():
            backend.script_for(fp, response)
        return backend

    # -- backend protocol ------------------------------------------------------

    def generate(self, req: CompletionRequest, prompt: str) -> str:
        fp = fingerprint(req)
        with self._lock:
            self.calls.append((req.template_id, fp))
            if self._queue:
                return self._queue.popleft()
            if fp in self._responses:
                return self._responses[fp]
        if self.use_default:
            responder = _DEFAULT_RESPONDERS.get(req.template_id)
            if responder is not None:
                return responder(req, self.seed)
        raise ProviderFailure(
            f"mock has no scripted or default response for template {req.template_id!r}"
        )


def default_response(req: CompletionRequest, seed: int = 0) -> str:
    """The templated response the mock would produce for this request."""
    responder = _DEFAULT_RESPONDERS.get(req.template_id)
    if responder is None:
        raise ProviderFailure(f"no default responder for template {req.template_id!r}")
    return responder(req, seed)


def load_mock_scripts(backend: MockBackend, scripts: Mapping[str, Any]) -> None:
    for fp, response in scripts.items():
        backend.script_for(fp, response)
