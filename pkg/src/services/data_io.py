"""
CSV ingestion and export for record sets.

Input files have a header naming schema columns. Later charges live in one
'events' cell, encoded as semicolon-separated events of the form

    offset_days:tag|tag:level:convicted

for example `400:drug:felony:1;10:violent|property:misdemeanor:0`. Missing
values are rejected, never imputed; the first offending row and column are
named in the error.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import pandas as pd
from pydantic import ValidationError

from src.core.errors import FeatureTypeError, RecordRangeError, SchemaError
from src.core.labels import build_labels
from src.core.records import (
    AGE_FEATURE,
    BUILTIN_SCHEMAS,
    LABEL_NAMES,
    ChargeEvent,
    ColumnSpec,
    LabelSet,
    Record,
    RecordSet,
    Schema,
    check_age,
    derive_features,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_TRUE = {"1", "true", "yes", "t", "y"}
_FALSE = {"0", "false", "no", "f", "n"}


def parse_events(cell: str, row: Optional[int] = None) -> List[ChargeEvent]:
    """
    Decode an events cell.

    Example:
        >>> parse_events("400:drug:felony:1")[0].offset_days
        400
    """
    events = []
    for chunk in str(cell).split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 4:
            raise SchemaError(
                f"row {row}: event '{chunk}' is not offset_days:tags:level:convicted",
                feature="events",
            )
        offset, tags, level, convicted = parts
        try:
            events.append(
                ChargeEvent(
                    offset_days=int(offset),
                    tags=frozenset(t for t in tags.split("|") if t),
                    level=level or "other",
                    convicted=_parse_bool(convicted, row, "events"),
                )
            )
        except (ValueError, ValidationError) as e:
            if isinstance(e, SchemaError):
                raise
            raise SchemaError(f"row {row}: bad event '{chunk}': {e}", feature="events")
    return events


def format_events(events: Iterable[ChargeEvent]) -> str:
    return ";".join(
        f"{e.offset_days}:{'|'.join(sorted(e.tags))}:{e.level}:{int(e.convicted)}" for e in events
    )


def _parse_bool(raw: str, row: Optional[int], column: str) -> bool:
    value = raw.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise FeatureTypeError(f"row {row}, column '{column}': expected a boolean, got '{raw}'")


def _parse_value(raw: str, spec: ColumnSpec, row: int) -> float:
    if spec.dtype == "bool":
        return float(_parse_bool(raw, row, spec.name))
    try:
        value = float(raw)
    except ValueError:
        raise FeatureTypeError(f"row {row}, column '{spec.name}': expected a number, got '{raw}'")
    if spec.dtype == "int" and not value.is_integer():
        raise FeatureTypeError(f"row {row}, column '{spec.name}': expected an integer, got '{raw}'")
    if value < 0:
        raise RecordRangeError(
            f"row {row}, column '{spec.name}': negative value {raw}", row=row, column=spec.name
        )
    if spec.name == AGE_FEATURE:
        check_age(value, row)
    return value


def _read_frame(path: PathLike) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path} is empty")
    if frame.empty:
        raise SchemaError(f"{path} has a header but no records")
    return frame


def load_csv(path: PathLike, schema: Schema, convicted_only: bool = False) -> RecordSet:
    """
    Load typed records.

    Args:
        path: CSV file with a header
        schema: Column declarations the header must satisfy
        convicted_only: Build labels from convicted charges only

    Returns:
        RecordSet; labels come from the events column when present, otherwise
        from label columns when all twelve are present

    Raises:
        SchemaError: Missing column, missing value or malformed events
        FeatureTypeError: Non-numeric or non-integer value
        RecordRangeError: Age outside [18, 70] or negative count
    """
    frame = _read_frame(path)
    header = set(frame.columns)
    required = [
        c.name for c in schema.columns if c.role in ("id", "sensitive", "feature") and not c.derived
    ]
    missing = [name for name in required if name not in header]
    if missing:
        raise SchemaError(f"{Path(path).name}: missing column '{missing[0]}'", feature=missing[0])

    features = [schema.column(n) for n in schema.feature_names if n in header]
    events_column = schema.events_name if schema.events_name in header else None
    label_columns = LABEL_NAMES if set(LABEL_NAMES) <= header else ()

    records: List[Record] = []
    for offset, raw in enumerate(frame.to_dict("records")):
        row = offset + 1
        for name in required:
            if str(raw[name]).strip() == "":
                raise SchemaError(f"row {row}: missing value in column '{name}'", feature=name)
        values: Dict[str, float] = {c.name: _parse_value(raw[c.name], c, row) for c in features}
        values = derive_features(values)
        events = parse_events(raw[events_column], row) if events_column else []
        if events_column:
            labels: Optional[LabelSet] = build_labels(events, convicted_only)
        elif label_columns:
            labels = LabelSet(**{n: _parse_bool(raw[n], row, n) for n in label_columns})
        else:
            labels = None
        records.append(
            Record(
                person_id=str(raw[schema.id_name]) if schema.id_name else str(row),
                sensitive={n: str(raw[n]) for n in schema.sensitive_names},
                features=values,
                events=events,
                labels=labels,
            )
        )
    logger.info("loaded %d records from %s", len(records), path)
    return RecordSet(records, schema)


def write_csv(records: RecordSet, path: PathLike, include_labels: bool = False) -> None:
    """
    Write records in schema column order.

    Label columns are added when requested or when the schema has no events column.
    """
    schema = records.schema
    rows = []
    for record in records:
        row: Dict[str, object] = {}
        for column in schema.columns:
            if column.role == "id":
                row[column.name] = record.person_id
            elif column.role == "sensitive":
                row[column.name] = record.sensitive.get(column.name, "")
            elif column.role == "feature" and column.name in record.features:
                value = record.features[column.name]
                row[column.name] = value if column.dtype == "float" else int(value)
            elif column.role == "events":
                row[column.name] = format_events(record.events)
        if record.labels is not None and (include_labels or schema.events_name is None):
            row.update(record.labels.as_dict())
        rows.append(row)
    pd.DataFrame(rows).to_csv(path, index=False)


def load_schema(spec: PathLike) -> Schema:
    """
    A built-in schema by name ('broward', 'kentucky') or a declaration file.

    Declaration files are CSV with columns name,dtype,role and an optional
    derived column.
    """
    if str(spec).lower() in BUILTIN_SCHEMAS:
        return BUILTIN_SCHEMAS[str(spec).lower()]
    path = Path(spec)
    frame = _read_frame(path)
    missing = [c for c in ("name", "dtype", "role") if c not in frame.columns]
    if missing:
        raise SchemaError(f"schema file {path.name} lacks '{missing[0]}'")
    columns = []
    for row_no, row in enumerate(frame.to_dict("records"), start=1):
        try:
            columns.append(
                ColumnSpec(
                    name=row["name"].strip(),
                    dtype=row["dtype"].strip(),
                    role=row["role"].strip(),
                    derived=row.get("derived", "").strip().lower() in _TRUE,
                )
            )
        except ValidationError as e:
            raise SchemaError(f"schema file {path.name}, row {row_no}: {e.errors()[0]['msg']}")
    try:
        return Schema(name=path.stem, columns=columns)
    except ValidationError as e:
        raise SchemaError(f"schema file {path.name}: {e.errors()[0]['msg']}")


def shared_schema(a: Schema, b: Schema, include_sensitive: bool = False) -> List[str]:
    """
    Sorted names both schemas declare as features.

    Example:
        >>> shared = shared_schema(BUILTIN_SCHEMAS["broward"], BUILTIN_SCHEMAS["kentucky"])
        >>> "age_at_first_charge" in shared
        False
    """
    roles = ("feature", "sensitive") if include_sensitive else ("feature",)
    names_a = {c.name for c in a.columns if c.role in roles}
    names_b = {c.name for c in b.columns if c.role in roles}
    return sorted(names_a & names_b)
