"""
Tests for records, schemas and tabular views.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import RecordRangeError, SchemaError
from src.core.records import (
    BROWARD_SCHEMA,
    KENTUCKY_SCHEMA,
    LABEL_NAMES,
    ColumnSpec,
    LabelSet,
    Record,
    RecordSet,
    Schema,
    check_age,
    derive_features,
)


def _records():
    rows = [
        ("a", "Male", 19, 3, True),
        ("b", "Female", 40, 0, False),
        ("c", "Male", 33, 1, True),
    ]
    return RecordSet(
        [
            Record(
                person_id=pid,
                sensitive={"sex": sex, "race": "Other"},
                features={"age_at_current_charge": age, "p_arrest": arrests},
                labels=LabelSet(general_two_year=label),
            )
            for pid, sex, age, arrests, label in rows
        ],
        KENTUCKY_SCHEMA,
    )


def test_twelve_labels():
    assert len(LABEL_NAMES) == 12
    assert LABEL_NAMES[:2] == ("general_two_year", "general_six_month")


def test_record_ranges():
    with pytest.raises(ValidationError):
        Record(person_id="x", features={"p_arrest": -1})
    with pytest.raises(ValidationError):
        Record(person_id="x", features={"age_at_current_charge": 17})
    with pytest.raises(ValidationError):
        Record(person_id="x", features={"p_arrest": float("nan")})
    with pytest.raises(RecordRangeError):
        check_age(71, row=4)


def test_missing_value_names_feature():
    with pytest.raises(SchemaError) as info:
        Record(person_id="x").value("p_arrest")
    assert info.value.feature == "p_arrest"


def test_derived_features():
    derived = derive_features(
        {"age_at_current_charge": 20, "current_violence": 1, "p_felony": 0, "p_misdemeanor": 2}
    )
    assert derived["current_violence20"] == 1.0
    assert derived["psa_prior_conviction"] == 1.0
    older = derive_features({"age_at_current_charge": 21, "current_violence": 1})
    assert older["current_violence20"] == 0.0
    assert "psa_prior_conviction" not in older


def test_labeled_view():
    data = _records().labeled("general_two_year", ["age_at_current_charge", "p_arrest"])
    assert data.X.shape == (3, 2)
    assert data.y.tolist() == [1, 0, 1]
    assert (data.n_positive, data.n_negative) == (2, 1)
    subset = data.subset(np.array([1, 2]))
    assert subset.y.tolist() == [0, 1]
    assert subset.X.index.tolist() == [0, 1]


def test_unknown_label_attribute_and_feature():
    records = _records()
    with pytest.raises(SchemaError):
        records.label_vector("arson_two_year")
    with pytest.raises(SchemaError):
        records.groups("religion")
    with pytest.raises(SchemaError):
        records.feature_frame(["p_violence"])


def test_groups_and_restrict():
    records = _records()
    assert records.groups("sex").tolist() == ["Male", "Female", "Male"]
    restricted = records.restrict(["p_arrest"])
    assert restricted.schema.feature_names == ["p_arrest"]
    assert list(restricted[0].features) == ["p_arrest"]


def test_schema_validation():
    with pytest.raises(ValidationError):
        Schema(columns=[ColumnSpec(name="x"), ColumnSpec(name="x")])
    with pytest.raises(SchemaError):
        KENTUCKY_SCHEMA.column("age_at_first_charge")


def test_builtin_schemas_differ_by_region():
    assert "ADE" in KENTUCKY_SCHEMA.feature_names
    assert "age_at_first_charge" not in KENTUCKY_SCHEMA.feature_names
    assert "age_at_first_charge" in BROWARD_SCHEMA.feature_names
    assert BROWARD_SCHEMA.sensitive_names == ["sex", "race"]
    assert BROWARD_SCHEMA.events_name == "events"
