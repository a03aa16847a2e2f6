"""
Record and schema models for recidivism data.

This module defines the core data structures using Pydantic:
- ChargeEvent: A later charge used to construct outcome labels
- LabelSet: The twelve binary recidivism labels
- Record: One individual's features, sensitive attributes, events and labels
- ColumnSpec / Schema: Declared columns with their type and role
- RecordSet: An immutable collection of records with tabular views
- LabeledData: A feature frame plus one binary label vector, what trainers consume

Records are validated on construction; downstream code can rely on
complete, non-negative features and an age inside the study range.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.errors import RecordRangeError, SchemaError

AGE_FEATURE = "age_at_current_charge"
MIN_AGE = 18
MAX_AGE = 70

LABEL_TYPES = ("general", "violent", "drug", "property", "felony", "misdemeanor")
HORIZONS = ("two_year", "six_month")
LABEL_NAMES = tuple(f"{kind}_{horizon}" for kind in LABEL_TYPES for horizon in HORIZONS)

ChargeLevel = Literal["felony", "misdemeanor", "other"]


class ChargeEvent(BaseModel):
    """
    A charge occurring after the current charge (or release) date.

    Attributes:
        offset_days: Days after the current date; 0 means the same day
        tags: Charge-type tags such as 'violent', 'drug', 'property'
        level: 'felony', 'misdemeanor' or 'other'
        convicted: Whether the charge ended in a conviction
    """

    model_config = ConfigDict(frozen=True)

    offset_days: int = Field(..., ge=0)
    tags: FrozenSet[str] = frozenset()
    level: ChargeLevel = "other"
    convicted: bool = False


class LabelSet(BaseModel):
    """
    The twelve recidivism labels: six charge types by two horizons.

    The six-month window is contained in the two-year window, so a positive
    six-month label always implies the matching two-year label.
    """

    model_config = ConfigDict(frozen=True)

    general_two_year: bool = False
    general_six_month: bool = False
    violent_two_year: bool = False
    violent_six_month: bool = False
    drug_two_year: bool = False
    drug_six_month: bool = False
    property_two_year: bool = False
    property_six_month: bool = False
    felony_two_year: bool = False
    felony_six_month: bool = False
    misdemeanor_two_year: bool = False
    misdemeanor_six_month: bool = False

    @model_validator(mode="after")
    def _horizons_nested(self) -> "LabelSet":
        for kind in LABEL_TYPES:
            if getattr(self, f"{kind}_six_month") and not getattr(self, f"{kind}_two_year"):
                raise ValueError(f"{kind}: six-month label set without two-year label")
        return self

    def as_dict(self) -> Dict[str, int]:
        return {name: int(getattr(self, name)) for name in LABEL_NAMES}


class Record(BaseModel):
    """
    One individual in a recidivism data set.

    Attributes:
        person_id: Unique identifier
        sensitive: Sensitive attributes by name (e.g. race, sex)
        features: Numeric feature values by name; booleans are stored as 0/1
        events: Later charges used to build labels
        labels: Outcome labels, when known
    """

    model_config = ConfigDict(frozen=True)

    person_id: str
    sensitive: Dict[str, str] = Field(default_factory=dict)
    features: Dict[str, float] = Field(default_factory=dict)
    events: List[ChargeEvent] = Field(default_factory=list)
    labels: Optional[LabelSet] = None

    @field_validator("features")
    @classmethod
    def _check_features(cls, features: Dict[str, float]) -> Dict[str, float]:
        for name, value in features.items():
            if not np.isfinite(value):
                raise ValueError(f"feature '{name}' is not finite")
            if value < 0:
                raise ValueError(f"feature '{name}' is negative ({value})")
        age = features.get(AGE_FEATURE)
        if age is not None and not MIN_AGE <= age <= MAX_AGE:
            raise ValueError(f"{AGE_FEATURE}={age} outside [{MIN_AGE}, {MAX_AGE}]")
        return features

    def value(self, name: str) -> float:
        """Return a feature value, raising SchemaError naming the feature if absent."""
        try:
            return self.features[name]
        except KeyError:
            raise SchemaError(f"record {self.person_id} has no feature '{name}'", feature=name)


ColumnType = Literal["int", "float", "bool", "str", "events"]
ColumnRole = Literal["id", "sensitive", "feature", "events", "label"]


class ColumnSpec(BaseModel):
    """
    A declared column.

    Attributes:
        name: Column name as it appears in the CSV header
        dtype: Value type
        role: How the column is used
        derived: Computed at load time when absent from the input
    """

    model_config = ConfigDict(frozen=True)

    name: str
    dtype: ColumnType = "int"
    role: ColumnRole = "feature"
    derived: bool = False


class Schema(BaseModel):
    """Ordered column declarations for one data source."""

    model_config = ConfigDict(frozen=True)

    name: str = "custom"
    columns: List[ColumnSpec]

    @model_validator(mode="after")
    def _unique_names(self) -> "Schema":
        names = [column.name for column in self.columns]
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise ValueError(f"duplicate columns: {', '.join(duplicates)}")
        if sum(column.role == "id" for column in self.columns) > 1:
            raise ValueError("at most one id column")
        return self

    def _names(self, role: str) -> List[str]:
        return [column.name for column in self.columns if column.role == role]

    @property
    def feature_names(self) -> List[str]:
        return self._names("feature")

    @property
    def sensitive_names(self) -> List[str]:
        return self._names("sensitive")

    @property
    def label_names(self) -> List[str]:
        return self._names("label")

    @property
    def id_name(self) -> Optional[str]:
        ids = self._names("id")
        return ids[0] if ids else None

    @property
    def events_name(self) -> Optional[str]:
        events = self._names("events")
        return events[0] if events else None

    def column(self, name: str) -> ColumnSpec:
        for column in self.columns:
            if column.name == name:
                return column
        raise SchemaError(f"schema '{self.name}' has no column '{name}'", feature=name)

    def restrict(self, features: Sequence[str]) -> "Schema":
        """Keep non-feature columns and only the given features."""
        keep = set(features)
        columns = [c for c in self.columns if c.role != "feature" or c.name in keep]
        return Schema(name=self.name, columns=columns)


def _schema(name: str, features: Sequence[tuple]) -> Schema:
    columns = [
        ColumnSpec(name="person_id", dtype="str", role="id"),
        ColumnSpec(name="sex", dtype="str", role="sensitive"),
        ColumnSpec(name="race", dtype="str", role="sensitive"),
    ]
    for spec in features:
        feature, dtype = spec[0], spec[1]
        derived = len(spec) > 2 and spec[2]
        columns.append(ColumnSpec(name=feature, dtype=dtype, derived=derived))
    columns.append(ColumnSpec(name="events", dtype="events", role="events"))
    return Schema(name=name, columns=columns)


_SHARED_FEATURES = [
    (AGE_FEATURE, "int"),
    ("p_arrest", "int"),
    ("p_charges", "int"),
    ("p_violence", "int"),
    ("p_felony", "int"),
    ("p_misdemeanor", "int"),
    ("p_property", "int"),
    ("p_murder", "int"),
    ("p_sex_offenses", "int"),
    ("p_weapon", "int"),
    ("p_felprop_viol", "int"),
    ("p_felassault", "int"),
    ("p_misdeassault", "int"),
    ("p_traffic", "int"),
    ("p_drug", "int"),
    ("p_dui", "int"),
    ("p_stalking", "int"),
    ("p_voyeurism", "int"),
    ("p_fraud", "int"),
    ("p_stealing", "int"),
    ("p_trespass", "int"),
    ("p_fta_two_year", "int"),
    ("p_fta_two_year_plus", "int"),
    ("p_pending_charge", "int"),
    ("p_probation", "int"),
    ("p_incarceration", "bool"),
    ("six_month", "bool"),
    ("one_year", "bool"),
    ("three_year", "bool"),
    ("five_year", "bool"),
    ("current_violence", "bool"),
    ("current_violence20", "bool", True),
    ("current_pending_charge", "bool"),
    ("psa_prior_conviction", "bool", True),
]

BROWARD_SCHEMA = _schema(
    "broward",
    _SHARED_FEATURES
    + [
        ("age_at_first_charge", "int"),
        ("p_juv_fel_count", "int"),
        ("p_famviol", "int"),
        ("p_domestic", "int"),
        ("total_convictions", "int"),
    ],
)

KENTUCKY_SCHEMA = _schema(
    "kentucky",
    _SHARED_FEATURES + [("p_assault", "int"), ("ADE", "int"), ("treatment", "int")],
)

BUILTIN_SCHEMAS = {"broward": BROWARD_SCHEMA, "kentucky": KENTUCKY_SCHEMA}


def derive_features(features: Dict[str, float]) -> Dict[str, float]:
    """
    Materialise compound PSA inputs so scoring tables stay single-comparison.

    Adds current_violence20 (violent current charge at age 20 or younger) and
    psa_prior_conviction (any prior felony or misdemeanor) when their inputs
    are present and the derived value is not already supplied.
    """
    derived = dict(features)
    if "current_violence20" not in derived and {"current_violence", AGE_FEATURE} <= derived.keys():
        derived["current_violence20"] = float(
            derived["current_violence"] > 0 and derived[AGE_FEATURE] <= 20
        )
    if "psa_prior_conviction" not in derived and {"p_felony", "p_misdemeanor"} <= derived.keys():
        derived["psa_prior_conviction"] = float(
            derived["p_felony"] + derived["p_misdemeanor"] > 0
        )
    return derived


@dataclass(frozen=True)
class LabeledData:
    """
    Feature frame plus one binary label vector.

    Attributes:
        X: Numeric features, one column per feature, rows aligned with y
        y: Binary labels (0/1 ints)
        label: Name of the label
    """

    X: pd.DataFrame
    y: np.ndarray
    label: str = "label"

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, index: np.ndarray) -> "LabeledData":
        return LabeledData(
            X=self.X.iloc[index].reset_index(drop=True), y=self.y[index], label=self.label
        )

    @property
    def n_positive(self) -> int:
        return int(self.y.sum())

    @property
    def n_negative(self) -> int:
        return int(len(self.y) - self.y.sum())


class RecordSet:
    """
    An immutable, schema-bound collection of records.

    Tabular views are built once and cached; records themselves are frozen
    Pydantic models, so a RecordSet can be shared freely between readers.

    Example:
        >>> records = RecordSet(records, KENTUCKY_SCHEMA)
        >>> data = records.labeled("general_two_year")
        >>> data.X.shape
    """

    def __init__(self, records: Iterable[Record], schema: Schema):
        self._records = tuple(records)
        self.schema = schema

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self._records)

    def __getitem__(self, index: int) -> Record:
        return self._records[index]

    @property
    def records(self) -> tuple:
        return self._records

    @cached_property
    def frame(self) -> pd.DataFrame:
        """One row per record: id, sensitive attributes, features and labels."""
        rows = []
        for record in self._records:
            row: Dict[str, object] = {"person_id": record.person_id}
            row.update(record.sensitive)
            row.update(record.features)
            if record.labels is not None:
                row.update(record.labels.as_dict())
            rows.append(row)
        return pd.DataFrame.from_records(rows)

    @property
    def field_names(self) -> List[str]:
        """Columns a scoring table may read: features, derived features and sensitive attributes."""
        return [c for c in self.frame.columns if c != "person_id" and c not in LABEL_NAMES]

    def feature_frame(self, features: Optional[Sequence[str]] = None) -> pd.DataFrame:
        names = list(features) if features is not None else self.schema.feature_names
        missing = [name for name in names if name not in self.frame.columns]
        if missing:
            raise SchemaError(f"records lack feature '{missing[0]}'", feature=missing[0])
        return self.frame[names].astype(float).reset_index(drop=True)

    def label_vector(self, label: str) -> np.ndarray:
        if label not in LABEL_NAMES and label not in self.frame.columns:
            raise SchemaError(f"unknown label '{label}'", feature=label)
        if label not in self.frame.columns:
            raise SchemaError(f"records carry no '{label}' labels", feature=label)
        return self.frame[label].to_numpy(dtype=int)

    def labeled(self, label: str, features: Optional[Sequence[str]] = None) -> LabeledData:
        return LabeledData(X=self.feature_frame(features), y=self.label_vector(label), label=label)

    def groups(self, attribute: str) -> np.ndarray:
        if attribute not in self.schema.sensitive_names and attribute not in self.frame.columns:
            raise SchemaError(f"unknown attribute '{attribute}'", feature=attribute)
        return self.frame[attribute].astype(str).to_numpy()

    def restrict(self, features: Sequence[str]) -> "RecordSet":
        """Keep only the named features on every record and in the schema."""
        keep = set(features)
        records = [
            record.model_copy(
                update={"features": {k: v for k, v in record.features.items() if k in keep}}
            )
            for record in self._records
        ]
        return RecordSet(records, self.schema.restrict(features))


def check_age(value: float, row: Optional[int] = None) -> None:
    """Raise RecordRangeError when an age falls outside the study range."""
    if not MIN_AGE <= value <= MAX_AGE:
        where = f" (row {row})" if row is not None else ""
        raise RecordRangeError(
            f"{AGE_FEATURE}={value:g} outside [{MIN_AGE}, {MAX_AGE}]{where}",
            row=row,
            column=AGE_FEATURE,
        )
