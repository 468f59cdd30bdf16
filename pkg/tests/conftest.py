from __future__ import annotations

import random

import pytest

from urbanlab.camp import (
    CampHypothesis,
    HypothesisStatus,
    InnovationType,
    Lineage,
    TierRating,
    parse_hypothesis,
)
from urbanlab.fixtures import camp_listing_document
from urbanlab.provider import HashEmbedder, MockBackend

_WORDS = (
    "urban", "density", "transit", "income", "heat", "mobility", "housing",
    "segregation", "employment", "flood", "green", "space", "rent", "air",
    "quality", "network", "access", "informal", "settlement", "energy",
    "nightlight", "commute", "zoning", "land", "use", "inequality", "health",
    "emission", "congestion", "retail", "amenity", "migration", "district",
)


def random_text(rng: random.Random, min_words: int = 3, max_words: int = 9) -> str:
    n = rng.randint(min_words, max_words)
    words = [rng.choice(_WORDS) for _ in range(n)]
    if rng.random() < 0.3:
        words.append(str(rng.randint(1990, 2030)))
    return " ".join(words)


def random_hypothesis(rng: random.Random, index: int = 0) -> CampHypothesis:
    """A structurally valid hypothesis with randomized content and lineage."""
    derived = rng.random() < 0.5
    if derived:
        parents = tuple(f"h-parent{rng.randint(0, 9999):04d}" for _ in range(rng.randint(1, 3)))
        innovation = rng.choice(list(InnovationType))
        lineage = Lineage(
            parents=parents,
            transformation=innovation if rng.random() < 0.8 else None,
            generation=rng.randint(1, 5),
        )
    else:
        innovation = None
        lineage = Lineage()
    extras = {}
    if rng.random() < 0.4:
        extras[f"X-{rng.choice(_WORDS)}"] = random_text(rng, 1, 4)
    if rng.random() < 0.2:
        extras["Attribution"] = {"Context": f"h-{rng.randint(0,99)}"}
    return CampHypothesis(
        id=f"h-{index:05d}-{rng.randint(0, 0xFFFF):04x}",
        title=random_text(rng, 2, 6).title(),
        abstract=random_text(rng, 8, 20),
        context=random_text(rng),
        var_a=random_text(rng),
        var_b=random_text(rng),
        mechanism=random_text(rng, 5, 14),
        pattern=random_text(rng, 4, 10),
        innovation_type=innovation,
        innovation_rationale=random_text(rng) if innovation else None,
        why_it_matters=random_text(rng) if rng.random() < 0.7 else None,
        lineage=lineage,
        tier=rng.choice(list(TierRating)) if rng.random() < 0.3 else None,
        status=rng.choice(list(HypothesisStatus)),
        extras=extras,
    )


@pytest.fixture()
def mobile_money() -> CampHypothesis:
    return parse_hypothesis(camp_listing_document())


@pytest.fixture()
def second_hypothesis() -> CampHypothesis:
    return parse_hypothesis(
        {
            "Context": "Post-industrial European mid-size cities, 2000-2020.",
            "A": "Regional financial integration depth (cross-border lending share).",
            "B": "Institutional quality of municipal governance (audit scores).",
            "Mechanism": "Integration channels investment toward already-capitalized districts, straining local oversight capacity.",
            "Pattern": "Governance scores diverge between core and periphery districts after integration shocks.",
            "Title": "Financial Integration and Municipal Governance Quality",
        }
    )


@pytest.fixture()
def mock_provider() -> MockBackend:
    return MockBackend(seed=0)


@pytest.fixture()
def embedder() -> HashEmbedder:
    return HashEmbedder(dimension=64, seed=0)
