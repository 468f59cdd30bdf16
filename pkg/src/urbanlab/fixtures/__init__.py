"""Golden listing fixtures and toy-corpus generation.

The engine ships with toy corpora (data cards, tables, snippets, a run
config) so the full pipeline runs offline; ``generate_workspace`` writes them
under a destination directory and returns the paths a run config needs.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

from urbanlab.datapool.cards import DataCard, DataCategory
from urbanlab.datapool.pool import DataPool, save_pool
from urbanlab.provider import EmbeddingBackend, HashEmbedder


def _load(name: str) -> Any:
    return json.loads(
        resources.files("urbanlab").joinpath("fixtures/data").joinpath(name).read_text("utf-8")
    )


def camp_listing_document() -> dict[str, Any]:
    """The published mobile-money hypothesis listing."""
    return _load("camp_listing.json")


def review_listing_document() -> dict[str, Any]:
    """The published temperature-hospitalization review listing."""
    return _load("review_listing.json")


def plan_listing_document() -> dict[str, Any]:
    """The published seven-phase analysis-plan listing."""
    return _load("plan_listing.json")


# ---------------------------------------------------------------------------
# Toy corpora
# ---------------------------------------------------------------------------

_MONTHS = [f"2020-{m:02d}" for m in range(1, 13)] + [f"2021-{m:02d}" for m in range(1, 13)]
_REGIONS = ("north", "south", "east", "west")


def _mobility_csv() -> str:
    lines = ["time,region,mobility_index"]
    for i, month in enumerate(_MONTHS):
        for j, region in enumerate(_REGIONS):
            lines.append(f"{month},{region},{100 + 3 * j + (i % 7)}")
    return "\n".join(lines) + "\n"


def _nightlights_csv() -> str:
    lines = ["year,region,radiance"]
    for year in (2019, 2020, 2021):
        for j, region in enumerate(_REGIONS):
            lines.append(f"{year},{region},{12.5 + 1.25 * j + 0.5 * (year - 2019)}")
    return "\n".join(lines) + "\n"


def _census_csv() -> str:
    lines = ["region,population,median_income"]
    for j, region in enumerate(_REGIONS):
        lines.append(f"{region},{250000 + 40000 * j},{21000 + 1500 * j}")
    return "\n".join(lines) + "\n"


def _roads_csv() -> str:
    lines = ["region,road_km,intersections"]
    for j, region in enumerate(_REGIONS):
        lines.append(f"{region},{480 + 55 * j},{1300 + 120 * j}")
    return "\n".join(lines) + "\n"


def toy_tables() -> dict[str, str]:
    return {
        "mobility.csv": _mobility_csv(),
        "nightlights.csv": _nightlights_csv(),
        "census.csv": _census_csv(),
        "roads.csv": _roads_csv(),
    }


def toy_cards(data_dir: Path) -> list[DataCard]:
    def url(name: str) -> str:
        return (data_dir / name).resolve().as_uri()

    return [
        DataCard(
            id="card-mobility",
            name="City mobility traces",
            country_region="Toyland",
            time="2020-2021",
            category=DataCategory.HUMAN_BEHAVIOUR,
            subcategory="mobility",
            description="Monthly human mobility index per region derived from GPS traces and transit card records.",
            url=url("mobility.csv"),
            provenance="bundled",
        ),
        DataCard(
            id="card-nightlights",
            name="Nighttime lights composites",
            country_region="Toyland",
            time="2019-2021",
            category=DataCategory.MULTIMODAL_SENSING,
            subcategory="satellite",
            description="Annual satellite remote sensing night lights radiance per region (optical composites).",
            url=url("nightlights.csv"),
            provenance="bundled",
        ),
        DataCard(
            id="card-census",
            name="National census extract",
            country_region="Toyland",
            time="2020",
            category=DataCategory.POLICY_SURVEY,
            subcategory="census",
            description="Population census and household survey aggregates: population and median income per region.",
            url=url("census.csv"),
            provenance="bundled",
        ),
        DataCard(
            id="card-roads",
            name="Road network summary",
            country_region="Toyland",
            time="2021",
            category=DataCategory.STATISTICAL_INFRASTRUCTURE,
            subcategory="transport",
            description="Road networks and transportation infrastructure statistics per region.",
            url=url("roads.csv"),
            provenance="bundled",
        ),
        DataCard(
            id="card-hospital",
            name="Hospital admissions registry",
            country_region="Toyland",
            time="2018-2022",
            category=DataCategory.HUMAN_BEHAVIOUR,
            subcategory="health",
            description="Patient-level hospitalisation counts; access is institutionally restricted.",
            url="restricted",
            provenance="bundled",
        ),
    ]


def toy_snippets() -> list[dict[str, Any]]:
    return [
        {
            "Id": "snip-did",
            "Language": "python",
            "Tags": ["difference in differences", "DiD", "panel regression", "causal inference"],
            "Body": "import pandas as pd\n\ndef did_estimate(df, outcome, treated, post):\n    g = df.groupby([treated, post])[outcome].mean()\n    return (g[1][1] - g[1][0]) - (g[0][1] - g[0][0])\n",
            "Source": "bundled",
        },
        {
            "Id": "snip-agg",
            "Language": "python",
            "Tags": ["temporal aggregation", "time series", "resampling"],
            "Body": "import pandas as pd\n\ndef yearly_mean(df, time_col='time'):\n    out = df.assign(year=df[time_col].str[:4])\n    return out.groupby('year').mean(numeric_only=True).reset_index()\n",
            "Source": "bundled",
        },
        {
            "Id": "snip-join",
            "Language": "python",
            "Tags": ["spatial join", "merge", "region key"],
            "Body": "import pandas as pd\n\ndef join_on_region(left, right, key='region'):\n    return left.merge(right, on=key, how='left')\n",
            "Source": "bundled",
        },
        {
            "Id": "snip-summary",
            "Language": "python",
            "Tags": ["descriptive statistics", "table profiling", "summary"],
            "Body": "import pandas as pd\n\ndef profile(df):\n    return {'rows': len(df), 'columns': list(df.columns)}\n",
            "Source": "bundled",
        },
    ]


def generate_workspace(
    dest: str | Path,
    embedder: EmbeddingBackend | None = None,
    seed: int = 7,
) -> dict[str, Any]:
    """Write the toy corpora and a ready-to-start run config under ``dest``."""
    dest = Path(dest)
    data_dir = dest / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    for name, content in toy_tables().items():
        (data_dir / name).write_text(content, encoding="utf-8")

    embedder = embedder or HashEmbedder(dimension=64, seed=0)
    pool = DataPool(dimension=embedder.dimension)
    for card in toy_cards(data_dir):
        pool.index_card(card, embedder)
    pool_dir = dest / "pool"
    save_pool(pool, pool_dir)

    snippet_path = dest / "snippets.json"
    snippet_path.write_text(
        json.dumps(toy_snippets(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )

    for name in ("camp_listing.json", "review_listing.json", "plan_listing.json"):
        (dest / name).write_text(
            json.dumps(_load(name), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )

    config = {
        "seed": seed,
        "hypothesis": camp_listing_document(),
        "pool_path": str(pool_dir),
        "snippet_path": str(snippet_path),
        "target_tier": "Tier3",
        "refinement_budget": 3,
        "gate_policy": "auto_approve",
        "match_k": 3,
        "fetch_mode": "http_get",
        "language": "python",
        "wall_clock_limit": 60.0,
        "max_attempts": 5,
        "simulator": {"enabled": True, "params": {"steps": 10, "seed": seed}},
    }
    config_path = dest / "run_config.json"
    config_path.write_text(
        json.dumps(config, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )

    return {
        "data_dir": str(data_dir),
        "pool_path": str(pool_dir),
        "snippet_path": str(snippet_path),
        "config_path": str(config_path),
        "config": config,
    }
