"""
Tests for CSV and schema IO.
"""

import pandas as pd
import pytest

from src.core.errors import FeatureTypeError, RecordRangeError, SchemaError
from src.core.records import BUILTIN_SCHEMAS, LABEL_NAMES
from src.services.data_io import (
    format_events,
    load_csv,
    load_schema,
    parse_events,
    shared_schema,
    write_csv,
)

HEADER = "person_id,race,age_at_current_charge,p_arrest,events\n"


def _write(tmp_path, body, name="records.csv"):
    path = tmp_path / name
    path.write_text(body)
    return path


def test_schema_declaration_file(small_schema_file):
    schema = load_schema(small_schema_file)
    assert schema.name == "small_schema"
    assert schema.feature_names == ["age_at_current_charge", "p_arrest"]
    assert schema.sensitive_names == ["race"]
    assert schema.id_name == "person_id"
    assert load_schema("Kentucky") is BUILTIN_SCHEMAS["kentucky"]


def test_schema_file_errors(tmp_path):
    with pytest.raises(SchemaError):
        load_schema(_write(tmp_path, "name,role\nx,feature\n", "bad.csv"))
    with pytest.raises(SchemaError):
        load_schema(_write(tmp_path, "name,dtype,role\nx,int,weight\n", "bad_role.csv"))


def test_load_builds_labels_from_events(tmp_path, small_schema_file):
    path = _write(
        tmp_path,
        HEADER + "p1,A,30,2,100:drug:felony:1\n" "p2,B,45,0,\n" "p3,A,19,5,400:violent:other:0\n",
    )
    records = load_csv(path, load_schema(small_schema_file))
    assert len(records) == 3
    assert records[0].labels.drug_six_month and records[0].labels.felony_two_year
    assert not records[1].labels.general_two_year
    assert records[2].labels.violent_two_year

    convicted = load_csv(path, load_schema(small_schema_file), convicted_only=True)
    assert not convicted[2].labels.general_two_year


def test_labels_from_label_columns(tmp_path):
    schema_path = _write(
        tmp_path,
        "name,dtype,role\nperson_id,str,id\nrace,str,sensitive\np_arrest,int,feature\n",
        "no_events.csv",
    )
    labels = ",".join(LABEL_NAMES)
    values = ",".join("1" if name == "general_two_year" else "0" for name in LABEL_NAMES)
    path = _write(tmp_path, f"person_id,race,p_arrest,{labels}\nq1,A,3,{values}\n")
    records = load_csv(path, load_schema(schema_path))
    assert records[0].labels.general_two_year
    assert not records[0].labels.drug_two_year


def test_missing_column(tmp_path, small_schema_file):
    path = _write(tmp_path, "person_id,race,age_at_current_charge,events\np1,A,30,\n")
    with pytest.raises(SchemaError) as info:
        load_csv(path, load_schema(small_schema_file))
    assert info.value.feature == "p_arrest"


def test_missing_value_names_row_and_column(tmp_path, small_schema_file):
    path = _write(tmp_path, HEADER + "p1,A,30,2,\np2,B,40,,\n")
    with pytest.raises(SchemaError) as info:
        load_csv(path, load_schema(small_schema_file))
    assert "row 2" in str(info.value)
    assert info.value.feature == "p_arrest"


def test_value_errors(tmp_path, small_schema_file):
    schema = load_schema(small_schema_file)
    with pytest.raises(RecordRangeError) as info:
        load_csv(_write(tmp_path, HEADER + "p1,A,15,2,\n"), schema)
    assert info.value.row == 1
    with pytest.raises(RecordRangeError):
        load_csv(_write(tmp_path, HEADER + "p1,A,30,-2,\n"), schema)
    with pytest.raises(FeatureTypeError):
        load_csv(_write(tmp_path, HEADER + "p1,A,30,lots,\n"), schema)
    with pytest.raises(FeatureTypeError):
        load_csv(_write(tmp_path, HEADER + "p1,A,30,2.5,\n"), schema)


def test_empty_inputs(tmp_path, small_schema_file):
    schema = load_schema(small_schema_file)
    with pytest.raises(SchemaError):
        load_csv(_write(tmp_path, ""), schema)
    with pytest.raises(SchemaError):
        load_csv(_write(tmp_path, HEADER), schema)
    with pytest.raises(SchemaError):
        load_csv(tmp_path / "absent.csv", schema)


def test_events_cell_codec():
    events = parse_events("400:drug:felony:1;10:violent|property:misdemeanor:0")
    assert [e.offset_days for e in events] == [400, 10]
    assert events[1].tags == frozenset({"violent", "property"})
    assert format_events(events) == "400:drug:felony:1;10:property|violent:misdemeanor:0"
    with pytest.raises(SchemaError):
        parse_events("400:drug:felony")
    with pytest.raises(SchemaError):
        parse_events("-3:drug:felony:1")


def test_synthetic_records_survive_a_file(tmp_path, kentucky):
    path = tmp_path / "kentucky.csv"
    write_csv(kentucky, path)
    loaded = load_csv(path, BUILTIN_SCHEMAS["kentucky"])
    assert len(loaded) == len(kentucky)
    pd.testing.assert_frame_equal(
        loaded.feature_frame(), kentucky.feature_frame(), check_dtype=False
    )
    assert (
        loaded.label_vector("general_two_year") == kentucky.label_vector("general_two_year")
    ).all()
    assert loaded.groups("race").tolist() == kentucky.groups("race").tolist()


def test_shared_schema():
    broward, kentucky = BUILTIN_SCHEMAS["broward"], BUILTIN_SCHEMAS["kentucky"]
    shared = shared_schema(broward, kentucky)
    assert "p_arrest" in shared
    assert "age_at_first_charge" not in shared and "ADE" not in shared
    assert shared == sorted(shared)
    assert shared_schema(kentucky, kentucky) == sorted(kentucky.feature_names)
    assert "race" in shared_schema(broward, kentucky, include_sensitive=True)
