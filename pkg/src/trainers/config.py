"""
Training configuration.

TrainConfig collects every knob the trainers and the CV harness read. It
loads from a flat key=value file (parsed with python-dotenv), where list
values are comma separated:

    penalty=l1
    c_grid=1e-4,1e-3,1e-2,1e-1,1
    coef_range=-5,5
    time_budget=1000
"""

from pathlib import Path
from typing import List, Literal, Mapping, Tuple, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.core.errors import ConfigError

_LIST_FIELDS = (
    "c_grid",
    "stumps_c_grid",
    "screening_c_grid",
    "riskslim_stump_grid",
    "max_depth_grid",
    "coef_range",
    "offset_range",
)


class TrainConfig(BaseModel):
    """
    Hyperparameters and solver settings.

    Attributes:
        penalty: 'l1' or 'l2' for the logistic baselines
        c_grid: Inverse penalty strengths searched for the logistic baselines
        class_weight: 'balanced' gives each class total weight n/2
        standardize: Standardise raw features before the logistic baselines
        max_iter: Iteration cap for the proximal-gradient solver
        tol: First-order optimality tolerance for the solver
        seed: Seed for fold assignment and any sampling
        max_features: Cap on original features in Additive Stumps models
        stumps_c_grid: Inverse penalty strengths searched for Additive Stumps
        coef_range: Integer points range for RiskSLIM-lite
        offset_range: Integer intercept range for RiskSLIM-lite
        l0_penalty: Per-nonzero-coefficient penalty in the integer objective
        time_budget: Seconds allowed for one integer search
        target_gap: Stop the integer search once the proven gap is this small
        max_selected_stumps: Screening keeps at most this many stumps
        screening_c_grid: Inverse penalty strengths tried during screening
        riskslim_stump_grid: Screening sizes searched by nested CV
        exhaustive_max_lattice: Enumerate every coefficient vector when the
            lattice has at most this many points
        max_depth: Default CART depth
        max_depth_grid: CART depths searched by nested CV
        min_gain: CART stops splitting below this information gain
        folds: Outer folds
        inner_folds: Inner folds for grid search
        stratify: Stratify fold assignment by label
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    penalty: Literal["l1", "l2"] = "l1"
    c_grid: List[float] = Field(default_factory=lambda: [1e-4, 1e-3, 1e-2, 1e-1, 1.0])
    class_weight: Literal["none", "balanced"] = "balanced"
    standardize: bool = True
    max_iter: int = Field(10_000, gt=0)
    tol: float = Field(1e-4, gt=0)
    seed: int = 0

    max_features: int = Field(15, gt=0)
    stumps_c_grid: List[float] = Field(
        default_factory=lambda: [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1]
    )

    coef_range: Tuple[int, int] = (-5, 5)
    offset_range: Tuple[int, int] = (-100, 100)
    l0_penalty: float = Field(1e-6, ge=0)
    time_budget: float = Field(1000.0, ge=0)
    target_gap: float = Field(0.05, ge=0)
    max_selected_stumps: int = Field(20, ge=0)
    screening_c_grid: List[float] = Field(
        default_factory=lambda: [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1]
    )
    riskslim_stump_grid: List[int] = Field(default_factory=lambda: [12, 16, 20])
    exhaustive_max_lattice: int = Field(20_000, ge=0)

    max_depth: int = Field(5, ge=0)
    max_depth_grid: List[int] = Field(default_factory=lambda: [5, 6, 7, 8, 9, 10])
    min_gain: float = Field(0.0, ge=0)

    folds: int = Field(5, ge=2)
    inner_folds: int = Field(5, ge=2)
    stratify: bool = False

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def _split_lists(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("c_grid", "stumps_c_grid", "screening_c_grid")
    @classmethod
    def _positive_grid(cls, grid: List[float]) -> List[float]:
        if not grid:
            raise ValueError("grid must not be empty")
        if any(c <= 0 for c in grid):
            raise ValueError("inverse penalty strengths must be positive")
        return grid

    @field_validator("riskslim_stump_grid", "max_depth_grid")
    @classmethod
    def _non_empty(cls, grid: List[int]) -> List[int]:
        if not grid:
            raise ValueError("grid must not be empty")
        return grid

    @model_validator(mode="after")
    def _ranges(self) -> "TrainConfig":
        for name in ("coef_range", "offset_range"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name} [{low}, {high}] is empty")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "TrainConfig":
        unknown = sorted(set(values) - set(cls.model_fields))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        try:
            return cls(**{k: v for k, v in values.items() if v is not None})
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(part) for part in first["loc"])
            raise ConfigError(f"invalid config value for '{where}': {first['msg']}")

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TrainConfig":
        """Load a flat key=value file."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_mapping(dotenv_values(path))

    def with_overrides(self, **overrides) -> "TrainConfig":
        return TrainConfig.from_mapping({**self.model_dump(), **overrides})
