"""Structured data cards: extraction from document text and classification.

A card indexes one urban dataset (name, region, observation period, taxonomy
type, description, access URL).  Classification into the four-category
taxonomy is keyword-rule driven and pure; the completion provider is only a
fallback when no rule fires.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from enum import Enum
from typing import Any, Mapping

from pydantic import BaseModel, ConfigDict, Field

from urbanlab.camp import canonical_json
from urbanlab.errors import MalformedDocument, SchemaViolation, Unclassifiable, UrbanLabError
from urbanlab.provider import CompletionRequest, TemplateStore, complete

logger = logging.getLogger("urbanlab.datapool")


class DataCategory(str, Enum):
    STATISTICAL_INFRASTRUCTURE = "StatisticalInfrastructure"
    HUMAN_BEHAVIOUR = "HumanBehaviour"
    POLICY_SURVEY = "PolicySurvey"
    MULTIMODAL_SENSING = "MultimodalSensing"


class DataCard(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    name: str
    country_region: str = ""
    time: str = ""
    category: DataCategory
    subcategory: str = ""
    description: str
    url: str
    provenance: str = "manual"


_URL_RE = re.compile(r"^(https?|ftp|file)://\S+$|^doi:\S+$", re.IGNORECASE)

RESTRICTED = "restricted"


def validate_card(card: DataCard) -> list[str]:
    problems: list[str] = []
    if not card.name.strip():
        problems.append("name must be non-empty")
    if not card.description.strip():
        problems.append("description must be non-empty")
    if card.url != RESTRICTED and not _URL_RE.match(card.url):
        problems.append(f"url must be a URL or {RESTRICTED!r}, got {card.url!r}")
    return problems


def ensure_valid_card(card: DataCard) -> DataCard:
    problems = validate_card(card)
    if problems:
        raise SchemaViolation("; ".join(problems), card_id=card.id)
    return card


# ---------------------------------------------------------------------------
# Wire format (Table-style key names)
# ---------------------------------------------------------------------------

_CATEGORY_ALIASES: dict[str, DataCategory] = {}
for _cat in DataCategory:
    _CATEGORY_ALIASES[_cat.value.lower()] = _cat
_CATEGORY_ALIASES.update(
    {
        "statisticalinfrastructuredata": DataCategory.STATISTICAL_INFRASTRUCTURE,
        "statistical infrastructure": DataCategory.STATISTICAL_INFRASTRUCTURE,
        "statistical infrastructure data": DataCategory.STATISTICAL_INFRASTRUCTURE,
        "human behaviour": DataCategory.HUMAN_BEHAVIOUR,
        "human behavior": DataCategory.HUMAN_BEHAVIOUR,
        "human behaviour data": DataCategory.HUMAN_BEHAVIOUR,
        "humanbehavior": DataCategory.HUMAN_BEHAVIOUR,
        "policy and survey": DataCategory.POLICY_SURVEY,
        "policy and survey data": DataCategory.POLICY_SURVEY,
        "policysurveydata": DataCategory.POLICY_SURVEY,
        "multimodal sensing": DataCategory.MULTIMODAL_SENSING,
        "multimodal sensing data": DataCategory.MULTIMODAL_SENSING,
    }
)


def parse_category(label: str) -> DataCategory:
    key = label.strip().lower()
    if key in _CATEGORY_ALIASES:
        return _CATEGORY_ALIASES[key]
    raise SchemaViolation(f"unknown data category {label!r}")


def card_document(card: DataCard) -> dict[str, Any]:
    type_label = card.category.value + (f"/{card.subcategory}" if card.subcategory else "")
    return {
        "Name": card.name,
        "Country/Region": card.country_region,
        "Time": card.time,
        "Type": type_label,
        "Description": card.description,
        "URL": card.url,
        "Id": card.id,
        "Provenance": card.provenance,
    }


def serialize_card(card: DataCard) -> str:
    return canonical_json(card_document(card))


def card_content_id(doc: Mapping[str, Any], provenance: str) -> str:
    basis = json.dumps([provenance, dict(doc)], ensure_ascii=False, sort_keys=True)
    return "d-" + hashlib.sha256(basis.encode("utf-8")).hexdigest()[:12]


def parse_card(
    doc: str | bytes | Mapping[str, Any],
    provenance: str = "manual",
    provider: Any = None,
) -> DataCard:
    """Build a card from a Table-shaped JSON document.

    A missing or unknown Type is classified from the description via the
    keyword rules (and provider fallback, when one is given).
    """
    if isinstance(doc, (str, bytes)):
        try:
            data = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from exc
    else:
        data = dict(doc)
    if not isinstance(data, dict):
        raise MalformedDocument("card document root must be a JSON object")
    missing = [k for k in ("Name", "Description", "URL") if not str(data.get(k, "")).strip()]
    if missing:
        raise SchemaViolation(f"missing card key(s): {', '.join(missing)}", missing=missing)
    url = str(data["URL"])
    if url != RESTRICTED and not _URL_RE.match(url):
        raise SchemaViolation(f"url must be a URL or {RESTRICTED!r}, got {url!r}")

    subcategory = ""
    category: DataCategory | None = None
    type_label = str(data.get("Type", "")).strip()
    if type_label:
        head, _, tail = type_label.partition("/")
        try:
            category = parse_category(head)
            subcategory = tail.strip()
        except SchemaViolation:
            subcategory = type_label

    card = DataCard(
        id=str(data.get("Id") or card_content_id(data, provenance)),
        name=str(data["Name"]),
        country_region=str(data.get("Country/Region", "")),
        time=str(data.get("Time", "")),
        category=category or DataCategory.POLICY_SURVEY,
        subcategory=subcategory,
        description=str(data["Description"]),
        url=str(data["URL"]),
        provenance=str(data.get("Provenance", provenance)),
    )
    if category is None:
        card = card.model_copy(update={"category": classify_card(card, provider=provider)})
    return ensure_valid_card(card)


_YEAR_RE = re.compile(r"\b((?:19|20)\d{2})\b")


def parse_time_span(time_text: str) -> tuple[int, int] | None:
    """Optional (start, end) year pair from the free-text Time field.

    The field stays prose; this is a best-effort view over any 4-digit years
    it mentions.  Returns None when no year is present.
    """
    years = [int(y) for y in _YEAR_RE.findall(time_text)]
    if not years:
        return None
    return min(years), max(years)


# ---------------------------------------------------------------------------
# Taxonomy classification
# ---------------------------------------------------------------------------

# Keyword lists follow the four-category taxonomy; first block to reach the
# highest hit count wins, ties resolved by this fixed order.
_KEYWORDS: tuple[tuple[DataCategory, tuple[str, ...]], ...] = (
    (
        DataCategory.STATISTICAL_INFRASTRUCTURE,
        (
            "road network", "road", "transportation infrastructure", "transit network",
            "building footprint", "land use", "points of interest", "poi",
            "administrative boundar", "zoning", "utility network", "electricity grid",
            "water network", "communication network", "infrastructure",
        ),
    ),
    (
        DataCategory.HUMAN_BEHAVIOUR,
        (
            "mobility", "gps", "transit card", "ride hailing", "ride-hailing",
            "consumption", "employment", "commerce", "social media",
            "online behaviour", "online behavior", "wellbeing", "well-being",
            "hospitalisation", "hospitalization", "hospital registry", "patient",
            "commuting", "foot traffic",
        ),
    ),
    (
        DataCategory.POLICY_SURVEY,
        (
            "census", "household survey", "household surveys", "statistical yearbook",
            "yearbook", "socioeconomic indicator", "government report",
            "planning document", "policy text", "policy", "regulatory", "survey",
        ),
    ),
    (
        DataCategory.MULTIMODAL_SENSING,
        (
            "satellite", "remote sensing", "imagery", "sar", "night lights",
            "nightlight", "drone", "aerial", "air quality", "sensor", "iot",
            "camera", "meteorological", "noise monitor", "temperature sensor",
        ),
    ),
)


def keyword_category(text: str) -> DataCategory | None:
    lowered = text.lower()
    best: DataCategory | None = None
    best_hits = 0
    for category, keywords in _KEYWORDS:
        hits = sum(1 for kw in keywords if kw in lowered)
        if hits > best_hits:
            best, best_hits = category, hits
    return best


def classify_card(card: DataCard, provider: Any = None, seed: int = 0,
                  templates: TemplateStore | None = None) -> DataCategory:
    """Deterministic keyword classification; provider fallback when no rule fires."""
    if not card.description.strip():
        raise SchemaViolation("card description must be non-empty")
    category = keyword_category(f"{card.name}\n{card.description}")
    if category is not None:
        return category
    if provider is None:
        raise Unclassifiable(f"no keyword rule fired for card {card.id!r} and no provider given")
    try:
        response = complete(
            CompletionRequest(
                template_id="classify_card",
                bindings={"description": card.description},
                seed=seed,
            ),
            provider,
            templates,
        )
        return parse_category(response.parsed.strip())
    except UrbanLabError as exc:
        raise Unclassifiable(f"provider fallback failed for card {card.id!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# Extraction from document text
# ---------------------------------------------------------------------------


def extract_cards(
    document: str,
    document_id: str,
    provider: Any,
    seed: int = 0,
    templates: TemplateStore | None = None,
) -> list[DataCard]:
    """Convert dataset descriptions in free text into validated cards.

    Cards that fail validation are skipped and logged; extraction is never
    fatal per-card.  An empty document yields no cards.
    """
    if not document.strip():
        return []
    response = complete(
        CompletionRequest(
            template_id="extract_cards",
            bindings={"document": document},
            schema_id="data_cards",
            seed=seed,
        ),
        provider,
        templates,
    )
    cards: list[DataCard] = []
    for raw in response.parsed["Cards"]:
        doc = dict(raw)
        doc.pop("Id", None)  # extracted cards are identified by content
        try:
            cards.append(parse_card(doc, provenance=document_id, provider=provider))
        except UrbanLabError as exc:
            logger.warning("skipping extracted card from %s: %s", document_id, exc)
    return cards
