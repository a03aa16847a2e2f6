"""
Additive Stumps: l1-penalized logistic regression on binary stumps.

The penalty acts on individual stumps, but the model size that matters to a
reader is the number of original features touched (one contribution plot
each). The fit therefore walks the penalty grid from the weakest penalty
down and keeps the first model touching at most `max_features` originals.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from src.core.errors import CapInfeasibleError
from src.core.records import LabeledData
from src.core.stumps import StumpBasis, contribution_curve, default_basis, expand
from src.trainers.config import TrainConfig
from src.trainers.logistic import LogisticModel, fit_logistic

logger = logging.getLogger(__name__)


class AdditiveStumpsModel(BaseModel):
    """
    A fitted Additive Stumps model.

    Attributes:
        basis: Stump definitions the model was fitted on
        logistic: The l1 model over stump columns
        curves: Per original feature, (value, contribution) points
        min_feasible_c: Weakest penalty (largest C) in the grid meeting the cap
    """

    model_config = ConfigDict(frozen=True)

    basis: StumpBasis
    logistic: LogisticModel
    curves: Dict[str, List[Tuple[float, float]]]
    min_feasible_c: float

    @property
    def used_features(self) -> List[str]:
        return used_features(self.logistic, self.basis)

    def predict_proba(self, X: pd.DataFrame) -> np.ndarray:
        stumps = expand(X, self.basis)
        return self.logistic.predict_proba(stumps.frame[self.logistic.columns])


def used_features(model: LogisticModel, basis: StumpBasis) -> List[str]:
    """Original features with at least one nonzero stump coefficient, in basis order."""
    origin = basis.origin
    touched = {origin[column] for column in model.nonzero}
    return [f for f in list(basis.features) + list(basis.passthrough) if f in touched]


def _curve_values(basis: StumpBasis, feature: str) -> List[float]:
    if feature in basis.passthrough:
        return [0.0, 1.0]
    thresholds = basis.features[feature].thresholds
    low = min(0.0, thresholds[0] - 1)
    high = thresholds[-1] + 1
    if basis.features[feature].direction == "decreasing":
        low, high = thresholds[0] - 1, max(high, 70.0)
    return [float(v) for v in np.arange(np.floor(low), np.ceil(high) + 1)]


def contribution_curves(
    model: LogisticModel, basis: StumpBasis
) -> Dict[str, List[Tuple[float, float]]]:
    """Contribution curve of every original feature the model touches."""
    coefficients = model.nonzero
    return {
        feature: contribution_curve(coefficients, feature, _curve_values(basis, feature))
        for feature in used_features(model, basis)
    }


def fit_additive_stumps(
    data: LabeledData,
    basis: Optional[StumpBasis] = None,
    config: TrainConfig = TrainConfig(),
    c_grid: Optional[Sequence[float]] = None,
) -> AdditiveStumpsModel:
    """
    Fit Additive Stumps under the original-feature cap.

    Args:
        data: Raw features and labels
        basis: Stump definitions (defaults to default_basis on data.X)
        config: Solver settings and the feature cap
        c_grid: Inverse penalty strengths to try (defaults to config.stumps_c_grid)

    Returns:
        AdditiveStumpsModel for the largest C whose model touches at most
        config.max_features original features

    Raises:
        CapInfeasibleError: Every C in the grid exceeds the cap
        DegenerateLabelError: Labels contain a single class
    """
    basis = basis if basis is not None else default_basis(data.X)
    stumps = expand(data.X, basis)
    l1 = config.with_overrides(penalty="l1")
    grid = sorted(c_grid if c_grid is not None else config.stumps_c_grid, reverse=True)

    for C in grid:
        model = fit_logistic(stumps.frame, data.y, l1, C=C, standardize=False)
        touched = used_features(model, basis)
        if len(touched) <= config.max_features:
            logger.debug("C=%g touches %d original features", C, len(touched))
            return AdditiveStumpsModel(
                basis=basis,
                logistic=model,
                curves=contribution_curves(model, basis),
                min_feasible_c=C,
            )
        logger.debug("C=%g touches %d original features; over the cap", C, len(touched))

    raise CapInfeasibleError(
        f"no C in {grid} keeps the model within {config.max_features} original features; "
        "try smaller C values (stronger penalties)"
    )


def feasible_grid(
    data: LabeledData, basis: Optional[StumpBasis], config: TrainConfig
) -> List[float]:
    """Grid values with penalty at least as strong as the weakest feasible one."""
    model = fit_additive_stumps(data, basis, config)
    return sorted(c for c in config.stumps_c_grid if c <= model.min_feasible_c)
