"""Deterministic tabular preprocessing with a step-log manifest.

Steps run in order on a parsed table; the persisted output plus manifest are
byte-identical across reruns of the same (input digest, steps) pair.
"""

from __future__ import annotations

import hashlib
import io
import json
from pathlib import Path
from typing import Any, Mapping, Sequence

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from urbanlab.datapool.fetch import LocalDataset
from urbanlab.errors import IncompatibleUnits, ParseError, UnknownColumn

# multiplicative unit conversions; (from, to) -> factor
_UNIT_FACTORS: dict[tuple[str, str], float] = {
    ("m", "km"): 0.001,
    ("km", "m"): 1000.0,
    ("g", "kg"): 0.001,
    ("kg", "g"): 1000.0,
    ("m2", "km2"): 1e-6,
    ("km2", "m2"): 1e6,
    ("wh", "kwh"): 0.001,
    ("kwh", "wh"): 1000.0,
    ("count", "thousand"): 0.001,
    ("thousand", "count"): 1000.0,
}

_GRANULARITY_PREFIX = {"yearly": 4, "monthly": 7}


class TableArtifact(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str
    digest: str
    manifest_path: str
    rows: int = Field(ge=0)
    columns: tuple[str, ...]


def _read_table(dataset: LocalDataset, delimiter: str) -> pd.DataFrame:
    try:
        return pd.read_csv(dataset.path, sep=delimiter)
    except Exception as exc:
        raise ParseError(f"cannot parse {dataset.path} as a delimited table: {exc}") from exc


def _apply_rename(df: pd.DataFrame, mapping: Mapping[str, str]) -> pd.DataFrame:
    missing = [c for c in mapping if c not in df.columns]
    if missing:
        raise UnknownColumn(f"cannot rename absent column(s): {', '.join(missing)}")
    return df.rename(columns=dict(mapping))


def _apply_align_time(df: pd.DataFrame, column: str, granularity: str, agg: str) -> pd.DataFrame:
    if column not in df.columns:
        raise UnknownColumn(f"time column {column!r} not present")
    prefix = _GRANULARITY_PREFIX.get(granularity)
    if prefix is None:
        raise ParseError(f"unknown time granularity {granularity!r}")
    if agg not in ("mean", "sum"):
        raise ParseError(f"unknown aggregation {agg!r}")
    keyed = df.assign(**{column: df[column].astype(str).str[:prefix]})
    numeric = [c for c in keyed.columns if c != column and pd.api.types.is_numeric_dtype(keyed[c])]
    other = [c for c in keyed.columns if c != column and c not in numeric]
    grouped = keyed.groupby(column, sort=True)
    parts = [getattr(grouped[numeric], agg)()] if numeric else []
    if other:
        parts.append(grouped[other].first())
    out = pd.concat(parts, axis=1).reset_index() if parts else grouped.size().reset_index(name="n")
    return out[[column] + [c for c in df.columns if c != column and c in out.columns]]


def _apply_units(df: pd.DataFrame, mapping: Mapping[str, Sequence[str]]) -> pd.DataFrame:
    out = df.copy()
    for column, pair in mapping.items():
        if column not in out.columns:
            raise UnknownColumn(f"cannot convert absent column {column!r}")
        if len(pair) != 2:
            raise IncompatibleUnits(f"unit spec for {column!r} must be [from, to]")
        key = (str(pair[0]).lower(), str(pair[1]).lower())
        factor = _UNIT_FACTORS.get(key)
        if factor is None:
            raise IncompatibleUnits(f"no conversion from {pair[0]!r} to {pair[1]!r}")
        if not pd.api.types.is_numeric_dtype(out[column]):
            raise IncompatibleUnits(f"column {column!r} is not numeric")
        out[column] = out[column] * factor
    return out


def _apply_spatial_join(df: pd.DataFrame, key: str, right_path: str) -> pd.DataFrame:
    try:
        right = pd.read_csv(right_path)
    except Exception as exc:
        raise ParseError(f"cannot parse join table {right_path}: {exc}") from exc
    if key not in df.columns:
        raise UnknownColumn(f"join key {key!r} not in left table")
    if key not in right.columns:
        raise UnknownColumn(f"join key {key!r} not in right table {right_path}")
    return df.merge(right, on=key, how="left", sort=False)


def preprocess(
    dataset: LocalDataset,
    steps: Sequence[Mapping[str, Any]],
    out_dir: str | Path = "processed",
) -> TableArtifact:
    """Apply ordered steps and persist the table plus its step-log manifest.

    Step shapes::

        {"op": "parse_table", "delimiter": ","}
        {"op": "rename_columns", "mapping": {"old": "new"}}
        {"op": "align_time", "column": "time", "granularity": "yearly", "agg": "mean"}
        {"op": "standardize_units", "mapping": {"col": ["km", "m"]}}
        {"op": "spatial_join", "key": "region", "right": "path.csv"}
    """
    if not steps:
        raise ParseError("steps must be non-empty")
    steps = [dict(s) for s in steps]

    delimiter = ","
    if steps and steps[0].get("op") == "parse_table":
        delimiter = str(steps[0].get("delimiter", ","))
    df = _read_table(dataset, delimiter)

    for step in steps:
        op = step.get("op")
        if op == "parse_table":
            continue  # consumed above
        elif op == "rename_columns":
            df = _apply_rename(df, step["mapping"])
        elif op == "align_time":
            df = _apply_align_time(
                df,
                column=str(step.get("column", "time")),
                granularity=str(step.get("granularity", "yearly")),
                agg=str(step.get("agg", "mean")),
            )
        elif op == "standardize_units":
            df = _apply_units(df, step["mapping"])
        elif op == "spatial_join":
            df = _apply_spatial_join(df, key=str(step["key"]), right_path=str(step["right"]))
        else:
            raise ParseError(f"unknown preprocessing op {op!r}")

    buffer = io.StringIO()
    df.to_csv(buffer, index=False, lineterminator="\n")
    payload = buffer.getvalue().encode("utf-8")
    output_digest = hashlib.sha256(payload).hexdigest()

    run_key = hashlib.sha256(
        json.dumps([dataset.digest, steps], sort_keys=True).encode("utf-8")
    ).hexdigest()[:12]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / f"table-{run_key}.csv"
    manifest_path = out_dir / f"table-{run_key}.manifest.json"
    table_path.write_bytes(payload)
    manifest_path.write_text(
        json.dumps(
            {
                "input_digest": dataset.digest,
                "steps": steps,
                "output_digest": output_digest,
                "rows": int(len(df)),
                "columns": list(df.columns),
            },
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return TableArtifact(
        path=str(table_path),
        digest=output_digest,
        manifest_path=str(manifest_path),
        rows=int(len(df)),
        columns=tuple(str(c) for c in df.columns),
    )
