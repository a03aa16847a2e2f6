"""
Binary stump expansion of numeric features.

A decreasing stump for threshold k fires when the value is <= k; an
increasing stump fires when the value is >= k. Age-family features expand
into decreasing stumps (risk falls with age); criminal-history counts expand
into increasing stumps. Binary features pass through unexpanded.

Summing a model's coefficients over one feature's active stumps gives that
feature's contribution curve, which is what gets plotted for Additive Stumps.
"""

import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.errors import FeatureTypeError, SchemaError, TableParseError
from src.core.scoring import format_threshold

Direction = Literal["increasing", "decreasing"]

AGE_THRESHOLDS = tuple(range(18, 61))
MAX_COUNT_THRESHOLD = 10

_COLUMN = re.compile(r"^(?P<feature>.+?)(?P<op><=|>=)(?P<threshold>-?[0-9.eE+-]+)$")


class StumpSpec(BaseModel):
    """Direction and thresholds for one feature."""

    model_config = ConfigDict(frozen=True)

    direction: Direction
    thresholds: Tuple[float, ...]

    @field_validator("thresholds")
    @classmethod
    def _strictly_increasing(cls, thresholds: Tuple[float, ...]) -> Tuple[float, ...]:
        if not thresholds:
            raise ValueError("at least one threshold required")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        return thresholds

    @property
    def op(self) -> str:
        return "<=" if self.direction == "decreasing" else ">="

    def column(self, feature: str, threshold: float) -> str:
        return f"{feature}{self.op}{format_threshold(threshold)}"


class StumpBasis(BaseModel):
    """
    Per-feature stump definitions plus binary passthrough features.

    Attributes:
        features: Expanded features with their direction and thresholds
        passthrough: Binary features copied into the stump matrix as-is
    """

    model_config = ConfigDict(frozen=True)

    features: Dict[str, StumpSpec] = Field(default_factory=dict)
    passthrough: Tuple[str, ...] = ()

    def columns_for(self, feature: str) -> List[str]:
        if feature in self.passthrough:
            return [feature]
        if feature not in self.features:
            raise SchemaError(f"basis has no feature '{feature}'", feature=feature)
        spec = self.features[feature]
        return [spec.column(feature, k) for k in spec.thresholds]

    @property
    def columns(self) -> List[str]:
        names: List[str] = []
        for feature in self.features:
            names.extend(self.columns_for(feature))
        names.extend(self.passthrough)
        return names

    @property
    def origin(self) -> Dict[str, str]:
        """Stump column -> original feature."""
        mapping = {}
        for feature in list(self.features) + list(self.passthrough):
            for column in self.columns_for(feature):
                mapping[column] = feature
        return mapping


@dataclass(frozen=True)
class StumpMatrix:
    """
    Binary stump columns with their mapping back to original features.

    Attributes:
        frame: 0/1 int8 columns named 'feature<=k' / 'feature>=k'
        origin: Stump column -> original feature
    """

    frame: pd.DataFrame
    origin: Dict[str, str]

    @property
    def columns(self) -> List[str]:
        return list(self.frame.columns)

    def to_csv(self, path) -> None:
        self.frame.to_csv(path, index=False)


def is_age_feature(name: str) -> bool:
    return name.startswith("age")


def _numeric_column(frame: pd.DataFrame, feature: str) -> np.ndarray:
    if feature not in frame.columns:
        raise SchemaError(f"records lack feature '{feature}'", feature=feature)
    column = frame[feature]
    if not pd.api.types.is_numeric_dtype(column) and not pd.api.types.is_bool_dtype(column):
        raise FeatureTypeError(f"feature '{feature}' is not numeric")
    values = column.to_numpy(dtype=float)
    if np.isnan(values).any():
        raise SchemaError(f"feature '{feature}' has missing values", feature=feature)
    return values


def expand(frame: pd.DataFrame, basis: StumpBasis) -> StumpMatrix:
    """
    Expand numeric features into binary stump columns.

    Args:
        frame: Records as a DataFrame with every basis feature present
        basis: Directions and thresholds

    Returns:
        StumpMatrix with columns in basis order, passthrough features last

    Raises:
        SchemaError: A basis feature is missing
        FeatureTypeError: A basis feature is not numeric

    Example:
        >>> spec = StumpSpec(direction="decreasing", thresholds=(18, 19, 20))
        >>> basis = StumpBasis(features={"age": spec})
        >>> expand(pd.DataFrame({"age": [19]}), basis).frame.iloc[0].tolist()
        [0, 1, 1]
    """
    columns: Dict[str, np.ndarray] = {}
    for feature, spec in basis.features.items():
        values = _numeric_column(frame, feature)
        for threshold in spec.thresholds:
            hits = values <= threshold if spec.direction == "decreasing" else values >= threshold
            columns[spec.column(feature, threshold)] = hits.astype(np.int8)
    for feature in basis.passthrough:
        values = _numeric_column(frame, feature)
        columns[feature] = (values > 0).astype(np.int8)
    stumps = pd.DataFrame(columns, index=range(len(frame)))
    return StumpMatrix(frame=stumps, origin=basis.origin)


def default_basis(
    frame: pd.DataFrame,
    features: Optional[Sequence[str]] = None,
    max_count_threshold: int = MAX_COUNT_THRESHOLD,
) -> StumpBasis:
    """
    Build the default basis from observed data.

    Age-family features get decreasing thresholds 18..60. Binary 0/1 features
    pass through. Other features get increasing integer thresholds
    1..min(max observed, max_count_threshold), keeping a threshold only when
    some observed value falls between it and the previous one so no two
    columns are identical on the data.
    """
    names = list(features) if features is not None else list(frame.columns)
    specs: Dict[str, StumpSpec] = {}
    passthrough: List[str] = []
    for feature in names:
        values = _numeric_column(frame, feature)
        if is_age_feature(feature):
            specs[feature] = StumpSpec(direction="decreasing", thresholds=AGE_THRESHOLDS)
            continue
        if set(np.unique(values)) <= {0.0, 1.0}:
            passthrough.append(feature)
            continue
        top = int(min(np.floor(values.max()), max_count_threshold))
        thresholds = []
        previous = -np.inf
        for k in range(1, top + 1):
            if np.any((values >= previous) & (values < k)) or previous == -np.inf:
                thresholds.append(float(k))
                previous = k
        if thresholds:
            specs[feature] = StumpSpec(direction="increasing", thresholds=tuple(thresholds))
    return StumpBasis(features=specs, passthrough=tuple(passthrough))


def aggregate_contribution(coefficients: Mapping[str, float], feature: str, value: float) -> float:
    """
    Total contribution of one feature's active stumps at a value.

    Args:
        coefficients: Stump column name -> coefficient (other features ignored)
        feature: Original feature name
        value: Feature value to evaluate

    Returns:
        Sum of the coefficients of this feature's stumps that fire at value

    Raises:
        SchemaError: No coefficient belongs to the feature
    """
    total = 0.0
    found = False
    for column, coefficient in coefficients.items():
        parsed = parse_stump_column(column)
        if parsed is None:
            if column == feature:
                found = True
                total += coefficient * float(value > 0)
            continue
        name, op, threshold = parsed
        if name != feature:
            continue
        found = True
        fires = value <= threshold if op == "<=" else value >= threshold
        if fires:
            total += coefficient
    if not found:
        raise SchemaError(f"no stump coefficients for feature '{feature}'", feature=feature)
    return total


def contribution_curve(
    coefficients: Mapping[str, float], feature: str, values: Iterable[float]
) -> List[Tuple[float, float]]:
    return [(float(v), aggregate_contribution(coefficients, feature, v)) for v in values]


def parse_stump_column(column: str) -> Optional[Tuple[str, str, float]]:
    match = _COLUMN.match(column)
    if match is None:
        return None
    try:
        threshold = float(match.group("threshold"))
    except ValueError:
        return None
    return match.group("feature"), match.group("op"), threshold


def parse_basis(text: str) -> StumpBasis:
    """
    Parse a basis file: one 'feature direction t1,t2,...' per line.

    The direction 'binary' marks a passthrough feature and takes no thresholds.
    Blank lines and '#' comments are ignored.
    """
    specs: Dict[str, StumpSpec] = {}
    passthrough: List[str] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) == 2 and tokens[1] == "binary":
            passthrough.append(tokens[0])
            continue
        if len(tokens) != 3:
            raise TableParseError("expected 'feature direction t1,t2,...'", line_no)
        feature, direction, raw_thresholds = tokens
        if direction not in ("increasing", "decreasing"):
            raise TableParseError(f"unknown direction '{direction}'", line_no)
        if feature in specs:
            raise TableParseError(f"duplicate feature '{feature}'", line_no)
        try:
            thresholds = tuple(float(t) for t in raw_thresholds.split(",") if t)
            specs[feature] = StumpSpec(direction=direction, thresholds=thresholds)
        except ValueError as e:
            raise TableParseError(f"bad thresholds for '{feature}': {e}", line_no)
    return StumpBasis(features=specs, passthrough=tuple(passthrough))


def serialize_basis(basis: StumpBasis) -> str:
    lines = []
    for feature, spec in basis.features.items():
        thresholds = ",".join(format_threshold(t) for t in spec.thresholds)
        lines.append(f"{feature} {spec.direction} {thresholds}")
    lines.extend(f"{feature} binary" for feature in basis.passthrough)
    return "\n".join(lines) + "\n"
