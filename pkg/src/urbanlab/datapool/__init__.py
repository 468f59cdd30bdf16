from urbanlab.datapool.cards import (
    RESTRICTED,
    DataCard,
    DataCategory,
    card_document,
    classify_card,
    ensure_valid_card,
    extract_cards,
    keyword_category,
    parse_card,
    parse_time_span,
    serialize_card,
    validate_card,
)
from urbanlab.datapool.fetch import (
    DEFAULT_BYTE_CAP,
    FetchPolicy,
    LocalDataset,
    PlannedFetch,
    copy_dataset,
    fetch_dataset,
    register_local_file,
    set_fetch_concurrency,
    store_payload,
)
from urbanlab.datapool.pool import (
    DataPool,
    MatchResult,
    card_embedding_text,
    index_card,
    load_pool,
    match_hypothesis,
    save_pool,
)
from urbanlab.datapool.preprocess import TableArtifact, preprocess

__all__ = [
    "DEFAULT_BYTE_CAP",
    "DataCard",
    "DataCategory",
    "DataPool",
    "FetchPolicy",
    "LocalDataset",
    "MatchResult",
    "PlannedFetch",
    "RESTRICTED",
    "TableArtifact",
    "card_document",
    "card_embedding_text",
    "classify_card",
    "copy_dataset",
    "ensure_valid_card",
    "extract_cards",
    "fetch_dataset",
    "index_card",
    "keyword_category",
    "load_pool",
    "match_hypothesis",
    "parse_card",
    "parse_time_span",
    "preprocess",
    "register_local_file",
    "save_pool",
    "serialize_card",
    "set_fetch_concurrency",
    "store_payload",
    "validate_card",
]
