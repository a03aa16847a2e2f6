"""
Tests for scoring tables: evaluation, the text format and validation.
"""

import math

import numpy as np
import pandas as pd
import pytest

from src.core.errors import FeatureTypeError, SchemaError, TableParseError, TableValidationError
from src.core.records import Record
from src.core.scoring import (
    Condition,
    ScoringTable,
    TableRow,
    evaluate_table,
    parse_table,
    reference_tables,
    render_table,
    score_frame,
    serialize_table,
    table_from_json,
    table_to_json,
)


def _general():
    return reference_tables()["general_two_year"]


def test_reference_table_half_risk_at_score_two():
    """Intercept -2 plus two satisfied rows gives probability 0.5."""
    assert evaluate_table(_general(), {"p_arrest": 4}) == (2, 0.5)


def test_reference_table_zero_score():
    score, probability = evaluate_table(_general(), {"p_arrest": 0})
    assert score == 0
    assert probability == pytest.approx(1.0 / (1.0 + math.exp(2.0)))


def test_stacked_rows_accumulate():
    table = _general()
    assert [evaluate_table(table, {"p_arrest": k})[0] for k in range(7)] == [0, 0, 1, 2, 2, 3, 3]


def test_violent_table_reads_sensitive_attributes():
    table = reference_tables()["violent_two_year"]
    record = Record(
        person_id="r1",
        sensitive={"sex": "Male", "race": "Other"},
        features={
            "age_at_current_charge": 25,
            "p_arrest": 2,
            "p_violence": 0,
            "p_incarceration": 1,
        },
    )
    score, probability = evaluate_table(table, record)
    assert score == 4
    assert probability == pytest.approx(1.0 / (1.0 + math.exp(2.0)))


def test_missing_feature_is_named():
    with pytest.raises(SchemaError) as info:
        evaluate_table(_general(), {"p_violence": 1})
    assert info.value.feature == "p_arrest"


def test_text_value_under_ordering_comparator():
    with pytest.raises(FeatureTypeError):
        evaluate_table(_general(), {"p_arrest": "many"})


def test_score_frame_matches_row_by_row():
    frame = pd.DataFrame({"p_arrest": [0, 1, 2, 3, 4, 5, 9]})
    scores, probabilities = score_frame(_general(), frame)
    for i, value in enumerate(frame["p_arrest"]):
        score, probability = evaluate_table(_general(), {"p_arrest": value})
        assert scores[i] == score
        assert probabilities[i] == pytest.approx(probability)


def test_text_format_reads_back():
    for table in reference_tables().values():
        assert parse_table(serialize_table(table)) == table


def test_json_reads_back():
    table = _general()
    assert table_from_json(table_to_json(table)) == table


def test_parse_reports_line_numbers():
    with pytest.raises(TableParseError) as info:
        parse_table("intercept -2\np_arrest >> 2 1\n")
    assert info.value.line == 2

    with pytest.raises(TableParseError) as info:
        parse_table("intercept minus-two\n")
    assert info.value.line == 1


def test_parse_requires_intercept():
    with pytest.raises(TableParseError):
        parse_table("p_arrest >= 2 1\n")


def test_parse_rejects_text_threshold_for_ordering():
    with pytest.raises(TableParseError):
        parse_table("intercept 0\nsex >= Male 1\n")


def test_points_outside_declared_range():
    with pytest.raises(TableValidationError):
        parse_table("intercept 0\ncoef_range -1 1\np_arrest >= 2 3\n")
    with pytest.raises(ValueError):
        ScoringTable(
            rows=[TableRow(condition=Condition(feature="x", op=">=", threshold=1), points=9)]
        )


def test_intercept_outside_offset_range():
    with pytest.raises(TableValidationError):
        parse_table("intercept 7\noffset_range -5 5\n")


def test_render_lists_every_row():
    text = render_table(_general())
    assert "-2 + score" in text
    assert text.count("p_arrest >=") == 3
    assert "SCORE" in text


def test_evaluation_is_deterministic():
    table = reference_tables()["violent_two_year"]
    record = {
        "sex": "Female",
        "age_at_current_charge": 30,
        "p_arrest": 5,
        "p_violence": 3,
        "p_incarceration": 0,
    }
    assert evaluate_table(table, record) == evaluate_table(table, record)


def _random_table(rng, n_rows, intercept):
    rows = [
        TableRow(
            condition=Condition(feature=f"x{j}", op=">=", threshold=1),
            points=int(rng.integers(-5, 6)),
        )
        for j in range(n_rows)
    ]
    return ScoringTable(rows=rows, intercept=intercept)


def test_probability_rises_strictly_with_score():
    rng = np.random.default_rng(4)
    for _ in range(50):
        table = _random_table(rng, 4, int(rng.integers(-10, 11)))
        frame = pd.DataFrame(rng.integers(0, 2, (40, 4)), columns=[f"x{j}" for j in range(4)])
        scores, probabilities = score_frame(table, frame)
        order = np.argsort(scores, kind="stable")
        steps = np.diff(scores[order])
        rises = np.diff(probabilities[order])
        assert ((probabilities > 0) & (probabilities < 1)).all()
        assert (rises[steps > 0] > 0).all()
        assert (rises[steps == 0] == 0).all()


def test_extreme_intercepts_stay_inside_the_unit_interval():
    condition = Condition(feature="x", op=">=", threshold=1)
    high = ScoringTable(intercept=100).with_row(condition, 5)
    low = ScoringTable(intercept=-100).with_row(condition, -5)
    for table in (high, low):
        _, probability = evaluate_table(table, {"x": 1})
        assert 0.0 < probability < 1.0
    _, probabilities = score_frame(high, pd.DataFrame({"x": [0, 1]}))
    assert (probabilities < 1.0).all()


def test_zero_point_row_changes_no_score():
    rng = np.random.default_rng(9)
    for _ in range(20):
        table = _random_table(rng, 3, int(rng.integers(-5, 6)))
        padded = table.with_row(Condition(feature="x3", op="<=", threshold=0), 0)
        frame = pd.DataFrame(rng.integers(0, 3, (30, 4)), columns=[f"x{j}" for j in range(4)])
        before = score_frame(table, frame)
        after = score_frame(padded, frame)
        assert after[0].tolist() == before[0].tolist()
        assert after[1].tolist() == before[1].tolist()
        record = frame.iloc[0].to_dict()
        assert evaluate_table(padded, record) == evaluate_table(table, record)
