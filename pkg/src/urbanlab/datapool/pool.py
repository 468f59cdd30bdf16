"""Shared embedding index over data cards, with exhaustive cosine matching.

Pools at this scale (tests go to ~10^3, production intent ~10^4) are scored
exhaustively with a dense matrix product — no approximate index.  Matching is
read-only and safe to run concurrently; mutation follows a single-writer
contract enforced with a lock.
"""

from __future__ import annotations

import struct
import threading
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from urbanlab.camp import CampHypothesis, camp_text
from urbanlab.datapool.cards import DataCard, ensure_valid_card, parse_card, serialize_card
from urbanlab.errors import DimensionMismatch, DuplicateId, MalformedDocument

if TYPE_CHECKING:
    from urbanlab.provider import EmbeddingBackend

SIDECAR_MAGIC = b"ULPOOL01"
SIDECAR_NAME = "vectors.bin"


class MatchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    card_id: str
    score: float = Field(ge=-1.0 - 1e-9, le=1.0 + 1e-9)


def card_embedding_text(card: DataCard) -> str:
    """Embedding input: the card's textual field values, newline-joined.

    Field values only (no key labels), empty fields skipped.
    """
    parts = [card.name, card.country_region, card.time, card.description]
    return "\n".join(p for p in parts if p.strip())


class DataPool:
    def __init__(self, dimension: int) -> None:
        if dimension < 1:
            raise DimensionMismatch(f"pool dimension must be positive, got {dimension}")
        self.dimension = int(dimension)
        self._cards: dict[str, DataCard] = {}
        self._vectors: dict[str, np.ndarray] = {}
        self._write_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._cards)

    def __contains__(self, card_id: str) -> bool:
        return card_id in self._cards

    def card(self, card_id: str) -> DataCard:
        return self._cards[card_id]

    def cards(self) -> list[DataCard]:
        return [self._cards[cid] for cid in sorted(self._cards)]

    def vector(self, card_id: str) -> np.ndarray:
        return self._vectors[card_id]

    # -- indexing -----------------------------------------------------------

    def index_card(self, card: DataCard, embedder: "EmbeddingBackend") -> str:
        """Store a card and its unit-norm vector; idempotent on identical content."""
        ensure_valid_card(card)
        if embedder.dimension != self.dimension:
            raise DimensionMismatch(
                f"embedder dimension {embedder.dimension} != pool dimension {self.dimension}"
            )
        with self._write_lock:
            existing = self._cards.get(card.id)
            if existing is not None:
                if existing == card:
                    return card.id
                raise DuplicateId(f"card id {card.id!r} already indexed with different content")
            vec = embedder.embed(card_embedding_text(card)).values
            if vec.shape != (self.dimension,):
                raise DimensionMismatch(
                    f"embedding shape {vec.shape} != ({self.dimension},)"
                )
            self._cards[card.id] = card
            self._vectors[card.id] = np.asarray(vec, dtype=np.float64)
        return card.id

    # -- matching ---------------------------------------------------------------

    def match_text(self, text: str, k: int, embedder: "EmbeddingBackend") -> list[MatchResult]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if embedder.dimension != self.dimension:
            raise DimensionMismatch(
                f"embedder dimension {embedder.dimension} != pool dimension {self.dimension}"
            )
        ids = sorted(self._cards)
        if not ids:
            return []
        query = embedder.embed(text).values
        matrix = np.stack([self._vectors[cid] for cid in ids])
        scores = matrix @ query
        order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
        top = order[: min(k, len(ids))]
        return [
            MatchResult(card_id=ids[i], score=float(np.clip(scores[i], -1.0, 1.0)))
            for i in top
        ]


def match_hypothesis(
    pool: DataPool,
    h: CampHypothesis,
    k: int,
    embedder: "EmbeddingBackend",
) -> list[MatchResult]:
    """Top-k cards by cosine similarity against the hypothesis's flattened text."""
    return pool.match_text(camp_text(h), k, embedder)


def index_card(pool: DataPool, card: DataCard, embedder: "EmbeddingBackend") -> str:
    return pool.index_card(card, embedder)


# ---------------------------------------------------------------------------
# Persistence: card files + binary vector sidecar
# ---------------------------------------------------------------------------
#
# Sidecar layout: 8-byte magic, uint32 LE dimension, uint32 LE count, then
# count rows of dimension little-endian float32, in ascending card-id order.


def save_pool(pool: DataPool, directory: str | Path) -> None:
    directory = Path(directory)
    cards_dir = directory / "cards"
    cards_dir.mkdir(parents=True, exist_ok=True)
    for stale in cards_dir.glob("*.json"):
        stale.unlink()
    ids = sorted(pool._cards)
    for cid in ids:
        (cards_dir / f"{cid}.json").write_text(
            serialize_card(pool.card(cid)) + "\n", encoding="utf-8"
        )
    with (directory / SIDECAR_NAME).open("wb") as fh:
        fh.write(SIDECAR_MAGIC)
        fh.write(struct.pack("<II", pool.dimension, len(ids)))
        for cid in ids:
            fh.write(pool.vector(cid).astype("<f4").tobytes())


def load_pool(directory: str | Path) -> DataPool:
    directory = Path(directory)
    sidecar = directory / SIDECAR_NAME
    try:
        blob = sidecar.read_bytes()
    except OSError as exc:
        raise MalformedDocument(f"cannot read vector sidecar: {exc}") from exc
    if blob[:8] != SIDECAR_MAGIC:
        raise MalformedDocument(f"bad sidecar magic in {sidecar}")
    dimension, count = struct.unpack("<II", blob[8:16])
    expected = 16 + count * dimension * 4
    if len(blob) != expected:
        raise MalformedDocument(
            f"sidecar length {len(blob)} != expected {expected} for {count}x{dimension}"
        )
    matrix = np.frombuffer(blob, dtype="<f4", offset=16).reshape(count, dimension)

    card_paths = sorted((directory / "cards").glob("*.json"), key=lambda p: p.stem)
    if len(card_paths) != count:
        raise MalformedDocument(
            f"sidecar holds {count} vectors but {len(card_paths)} card files exist"
        )
    pool = DataPool(dimension=dimension)
    for row, path in enumerate(card_paths):
        card = parse_card(path.read_text(encoding="utf-8"))
        if card.id != path.stem:
            raise MalformedDocument(f"card file {path.name} holds id {card.id!r}")
        pool._cards[card.id] = card
        pool._vectors[card.id] = matrix[row].astype(np.float64)
    return pool
