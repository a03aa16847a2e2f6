"""
Integer scoring tables with a logistic link.

A scoring table is a list of single-comparison conditions, each worth an
integer number of points, plus an integer intercept. The score of a record
is the sum of points of its satisfied conditions; its risk is
1 / (1 + exp(-(intercept + score))).

Tables are the interchange form for both learned RiskSLIM-lite models and
the built-in PSA scorers, and serialize to a line-oriented text format
or JSON.
"""

import math
from typing import List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, StrictInt, ValidationError, model_validator
from scipy.special import expit

from src.core.errors import FeatureTypeError, SchemaError, TableParseError, TableValidationError
from src.core.records import Record

Comparator = Literal["<=", ">=", "="]
COMPARATORS = ("<=", ">=", "=")

DEFAULT_COEF_RANGE = (-5, 5)
DEFAULT_OFFSET_RANGE = (-100, 100)

_PROBABILITY_FLOOR = np.nextafter(0.0, 1.0)
_PROBABILITY_CEILING = np.nextafter(1.0, 0.0)


class Condition(BaseModel):
    """A single comparison: feature op threshold."""

    model_config = ConfigDict(frozen=True)

    feature: str
    op: Comparator
    threshold: Union[float, str]

    @model_validator(mode="after")
    def _numeric_for_order(self) -> "Condition":
        if self.op != "=" and isinstance(self.threshold, str):
            raise ValueError(f"comparator {self.op} needs a numeric threshold")
        return self

    def holds(self, value: Union[float, str, bool]) -> bool:
        if self.op == "=":
            if isinstance(self.threshold, str):
                return str(value) == self.threshold
            return _as_number(self.feature, value) == self.threshold
        number = _as_number(self.feature, value)
        if self.op == "<=":
            return number <= self.threshold
        return number >= self.threshold

    def render(self) -> str:
        return f"{self.feature} {self.op} {format_threshold(self.threshold)}"


class TableRow(BaseModel):
    """One line of a scoring table."""

    model_config = ConfigDict(frozen=True)

    condition: Condition
    points: StrictInt


class ScoringTable(BaseModel):
    """
    Integer-point linear model with a logistic link.

    Attributes:
        rows: Conditions with their points
        intercept: Integer offset added before the logistic link
        coef_range: Inclusive bounds every row's points must respect
        offset_range: Inclusive bounds for the intercept
        title: Optional display name

    Example:
        >>> table = ScoringTable(rows=[...], intercept=-2)
        >>> evaluate_table(table, {"p_arrest": 4})
        (2, 0.5)
    """

    model_config = ConfigDict(frozen=True)

    rows: List[TableRow] = Field(default_factory=list)
    intercept: StrictInt = 0
    coef_range: Tuple[int, int] = DEFAULT_COEF_RANGE
    offset_range: Tuple[int, int] = DEFAULT_OFFSET_RANGE
    title: Optional[str] = None

    @model_validator(mode="after")
    def _within_ranges(self) -> "ScoringTable":
        low, high = self.coef_range
        if low > high:
            raise ValueError(f"empty coefficient range [{low}, {high}]")
        for row in self.rows:
            if not low <= row.points <= high:
                raise ValueError(
                    f"{row.condition.render()}: {row.points} points outside [{low}, {high}]"
                )
        off_low, off_high = self.offset_range
        if not off_low <= self.intercept <= off_high:
            raise ValueError(f"intercept {self.intercept} outside [{off_low}, {off_high}]")
        return self

    @property
    def features(self) -> List[str]:
        seen: List[str] = []
        for row in self.rows:
            if row.condition.feature not in seen:
                seen.append(row.condition.feature)
        return seen

    def check_schema(self, names: Sequence[str]) -> None:
        """Raise SchemaError for the first referenced feature not in names."""
        available = set(names)
        for feature in self.features:
            if feature not in available:
                raise SchemaError(
                    f"{self.title or 'table'} references unknown feature '{feature}'",
                    feature=feature,
                )

    def with_row(self, condition: Condition, points: int) -> "ScoringTable":
        rows = [*self.rows, TableRow(condition=condition, points=points)]
        return ScoringTable(
            rows=rows,
            intercept=self.intercept,
            coef_range=self.coef_range,
            offset_range=self.offset_range,
            title=self.title,
        )


def _as_number(feature: str, value: Union[float, str, bool]) -> float:
    if isinstance(value, (bool, np.bool_)):
        return float(value)
    if isinstance(value, (int, float, np.integer, np.floating)):
        return float(value)
    raise FeatureTypeError(f"feature '{feature}' has non-numeric value {value!r}")


def format_threshold(threshold: Union[float, str]) -> str:
    if isinstance(threshold, str):
        return threshold
    if float(threshold).is_integer():
        return str(int(threshold))
    return repr(float(threshold))


def _lookup(record: Union[Record, Mapping[str, object]], feature: str):
    if isinstance(record, Record):
        if feature in record.features:
            return record.features[feature]
        if feature in record.sensitive:
            return record.sensitive[feature]
        raise SchemaError(f"record {record.person_id} has no feature '{feature}'", feature=feature)
    if feature not in record:
        raise SchemaError(f"record has no feature '{feature}'", feature=feature)
    value = record[feature]
    if value is None or (isinstance(value, float) and math.isnan(value)):
        raise SchemaError(f"feature '{feature}' is missing", feature=feature)
    return value


def risk(margin: Union[float, np.ndarray]) -> np.ndarray:
    """
    Logistic link clipped to the open interval (0, 1).

    Larger integer margins give strictly larger probabilities up to a margin of
    about 36. Beyond that float64 saturates at 1 and the clip keeps the result
    one ulp below it.
    """
    return np.clip(expit(margin), _PROBABILITY_FLOOR, _PROBABILITY_CEILING)


def evaluate_table(
    table: ScoringTable, record: Union[Record, Mapping[str, object]]
) -> Tuple[int, float]:
    """
    Score one record.

    Args:
        table: The scoring table
        record: A Record or a plain mapping from feature name to value

    Returns:
        (score, probability): score excludes the intercept; probability is the
        logistic of intercept + score

    Raises:
        SchemaError: A referenced feature is absent
        FeatureTypeError: A non-numeric value meets an ordering comparator
    """
    score = 0
    for row in table.rows:
        if row.condition.holds(_lookup(record, row.condition.feature)):
            score += row.points
    return score, float(risk(table.intercept + score))


def score_frame(table: ScoringTable, frame: pd.DataFrame) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised evaluate_table over the rows of a DataFrame."""
    scores = np.zeros(len(frame), dtype=np.int64)
    for row in table.rows:
        condition = row.condition
        if condition.feature not in frame.columns:
            raise SchemaError(
                f"table references unknown feature '{condition.feature}'",
                feature=condition.feature,
            )
        column = frame[condition.feature]
        if isinstance(condition.threshold, str):
            hits = column.astype(str).to_numpy() == condition.threshold
        else:
            if not pd.api.types.is_numeric_dtype(column):
                raise FeatureTypeError(f"feature '{condition.feature}' is not numeric")
            values = column.to_numpy(dtype=float)
            if condition.op == "<=":
                hits = values <= condition.threshold
            elif condition.op == ">=":
                hits = values >= condition.threshold
            else:
                hits = values == condition.threshold
        scores += row.points * hits.astype(np.int64)
    return scores, risk(table.intercept + scores.astype(float))


def serialize_table(table: ScoringTable) -> str:
    """Render a table in the line-oriented text format."""
    lines = []
    if table.title:
        lines.append(f"# {table.title}")
    lines.append(f"intercept {table.intercept}")
    lines.append(f"coef_range {table.coef_range[0]} {table.coef_range[1]}")
    lines.append(f"offset_range {table.offset_range[0]} {table.offset_range[1]}")
    for row in table.rows:
        lines.append(f"{row.condition.render()} {row.points}")
    return "\n".join(lines) + "\n"


def _parse_int(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise TableParseError(f"expected an integer, got '{token}'", line)


def _parse_threshold(token: str) -> Union[float, str]:
    try:
        return float(token)
    except ValueError:
        return token


def parse_table(text: str) -> ScoringTable:
    """
    Parse the text format produced by serialize_table.

    Raises:
        TableParseError: Malformed line (carries the 1-based line number)
        TableValidationError: Points or intercept outside the declared ranges
    """
    header = {}
    rows = []
    title = None
    line_no = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if title is None and line_no == 1:
                title = line.lstrip("#").strip() or None
            continue
        tokens = line.split()
        key = tokens[0]
        if key in ("intercept", "coef_range", "offset_range"):
            if key in header:
                raise TableParseError(f"duplicate '{key}' header", line_no)
            values = [_parse_int(token, line_no) for token in tokens[1:]]
            expected = 1 if key == "intercept" else 2
            if len(values) != expected:
                raise TableParseError(f"'{key}' takes {expected} integer(s)", line_no)
            header[key] = values[0] if key == "intercept" else tuple(values)
            continue
        if len(tokens) != 4:
            raise TableParseError("rows read 'feature op threshold points'", line_no)
        feature, op, threshold, points = tokens
        if op not in COMPARATORS:
            raise TableParseError(f"unknown comparator '{op}'", line_no)
        threshold_value = _parse_threshold(threshold)
        if op != "=" and isinstance(threshold_value, str):
            raise TableParseError(f"comparator {op} needs a numeric threshold", line_no)
        condition = Condition(feature=feature, op=op, threshold=threshold_value)
        rows.append(TableRow(condition=condition, points=_parse_int(points, line_no)))
    if "intercept" not in header:
        raise TableParseError("missing 'intercept' header", max(line_no, 1))
    try:
        return ScoringTable(
            rows=rows,
            intercept=header["intercept"],
            coef_range=header.get("coef_range", DEFAULT_COEF_RANGE),
            offset_range=header.get("offset_range", DEFAULT_OFFSET_RANGE),
            title=title,
        )
    except ValidationError as e:
        raise TableValidationError(str(e.errors()[0]["msg"]))


def table_to_json(table: ScoringTable) -> str:
    return table.model_dump_json(indent=2)


def table_from_json(text: str) -> ScoringTable:
    try:
        return ScoringTable.model_validate_json(text)
    except ValidationError as e:
        raise TableValidationError(str(e.errors()[0]["msg"]))


def render_table(table: ScoringTable) -> str:
    """Human-readable rendering in the familiar points-table layout."""
    width = max([len(row.condition.render()) for row in table.rows] + [24])
    lines = []
    if table.title:
        lines.append(table.title)
    lines.append(f"Pr(Y = +1) = 1 / (1 + exp(-({table.intercept} + score)))")
    for row in table.rows:
        unit = "point" if abs(row.points) == 1 else "points"
        lines.append(f"{row.condition.render():<{width}}  {row.points:>3} {unit:<6} + ...")
    lines.append(f"{'ADD POINTS FROM ROWS 1 TO ' + str(len(table.rows)):<{width}}  SCORE = .....")
    return "\n".join(lines) + "\n"


def _row(feature: str, op: str, threshold: Union[float, str], points: int) -> TableRow:
    return TableRow(condition=Condition(feature=feature, op=op, threshold=threshold), points=points)


def reference_tables() -> dict:
    """The published Kentucky two-year scoring tables (general and violent)."""
    general = ScoringTable(
        title="Kentucky two-year general recidivism",
        intercept=-2,
        rows=[
            _row("p_arrest", ">=", 2, 1),
            _row("p_arrest", ">=", 3, 1),
            _row("p_arrest", ">=", 5, 1),
        ],
    )
    violent = ScoringTable(
        title="Kentucky two-year violent recidivism",
        intercept=-6,
        rows=[
            _row("sex", "=", "Male", 1),
            _row("age_at_current_charge", "<=", 27, 1),
            _row("p_arrest", ">=", 2, 1),
            _row("p_violence", ">=", 1, 1),
            _row("p_incarceration", "=", 1, 1),
        ],
    )
    return {"general_two_year": general, "violent_two_year": violent}
