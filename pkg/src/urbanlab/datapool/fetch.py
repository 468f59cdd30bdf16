"""Dataset retrieval with a dry-run mode and a byte-capped HTTP mode.

Fetched payloads are stored content-addressed (path derived from the sha256
digest), so identical content always lands at the same relative path.
"""

from __future__ import annotations

import hashlib
import shutil
import threading
import urllib.parse
from pathlib import Path
from typing import Literal

import httpx
from pydantic import BaseModel, ConfigDict, Field

from urbanlab.datapool.cards import RESTRICTED, DataCard
from urbanlab.errors import ByteCapExceeded, FetchFailed, RestrictedSource

DEFAULT_BYTE_CAP = 256 * 1024 * 1024

# global in-flight cap for network fetches; reconfigure before fetching
_fetch_slots = threading.BoundedSemaphore(8)


def set_fetch_concurrency(slots: int) -> None:
    global _fetch_slots
    if slots < 1:
        raise ValueError("fetch concurrency must be >= 1")
    _fetch_slots = threading.BoundedSemaphore(slots)


class FetchPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Literal["dry_run", "http_get"] = "dry_run"
    byte_cap: int = Field(default=DEFAULT_BYTE_CAP, gt=0)
    timeout: float = Field(default=30.0, gt=0)


class PlannedFetch(BaseModel):
    model_config = ConfigDict(frozen=True)

    card_id: str
    url: str
    restricted: bool = False


class LocalDataset(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str
    digest: str
    size: int = Field(ge=0)


def _suffix(url: str) -> str:
    name = urllib.parse.urlparse(url).path.rsplit("/", 1)[-1]
    if "." in name:
        ext = "." + name.rsplit(".", 1)[-1]
        if 1 < len(ext) <= 8 and ext[1:].isalnum():
            return ext
    return ".dat"


def store_payload(payload: bytes, dest_dir: str | Path, suffix: str = ".dat") -> LocalDataset:
    digest = hashlib.sha256(payload).hexdigest()
    dest_dir = Path(dest_dir)
    dest_dir.mkdir(parents=True, exist_ok=True)
    path = dest_dir / f"{digest[:16]}{suffix}"
    if not path.exists():
        path.write_bytes(payload)
    return LocalDataset(path=str(path), digest=digest, size=len(payload))


def register_local_file(path: str | Path, dest_dir: str | Path) -> LocalDataset:
    """Copy an existing file into the content-addressed store."""
    source = Path(path)
    try:
        payload = source.read_bytes()
    except OSError as exc:
        raise FetchFailed(f"cannot read local file {source}: {exc}") from exc
    dataset = store_payload(payload, dest_dir, suffix=source.suffix or ".dat")
    return dataset


def fetch_dataset(
    card: DataCard,
    policy: FetchPolicy,
    dest_dir: str | Path = "datasets",
) -> PlannedFetch | LocalDataset:
    """Resolve a card's URL per policy.

    ``dry_run`` plans the fetch without touching the network or filesystem;
    ``http_get`` downloads (http/https), reads ``file://`` URLs locally, and
    enforces the byte cap either way.
    """
    if policy.mode == "dry_run":
        return PlannedFetch(card_id=card.id, url=card.url, restricted=card.url == RESTRICTED)
    if card.url == RESTRICTED:
        raise RestrictedSource(f"card {card.id!r} points at restricted data")

    parsed = urllib.parse.urlparse(card.url)
    if parsed.scheme == "file":
        source = Path(urllib.parse.unquote(parsed.path))
        try:
            if source.stat().st_size > policy.byte_cap:
                raise ByteCapExceeded(
                    f"{source} exceeds byte cap {policy.byte_cap}", card_id=card.id
                )
            payload = source.read_bytes()
        except OSError as exc:
            raise FetchFailed(f"cannot read {source}: {exc}") from exc
        return store_payload(payload, dest_dir, suffix=_suffix(card.url))

    if parsed.scheme not in ("http", "https"):
        raise FetchFailed(f"unsupported URL scheme {parsed.scheme!r} for card {card.id!r}")

    chunks: list[bytes] = []
    received = 0
    try:
        with _fetch_slots, httpx.stream(
            "GET", card.url, timeout=policy.timeout, follow_redirects=True
        ) as resp:
            resp.raise_for_status()
            for chunk in resp.iter_bytes():
                received += len(chunk)
                if received > policy.byte_cap:
                    raise ByteCapExceeded(
                        f"download exceeded byte cap {policy.byte_cap}", card_id=card.id
                    )
                chunks.append(chunk)
    except httpx.HTTPError as exc:
        raise FetchFailed(f"fetch of {card.url} failed: {exc}", card_id=card.id) from exc
    return store_payload(b"".join(chunks), dest_dir, suffix=_suffix(card.url))


def copy_dataset(dataset: LocalDataset, dest: str | Path) -> Path:
    """Stage a fetched dataset at an explicit path (e.g. into a sandbox)."""
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(dataset.path, dest)
    return dest
