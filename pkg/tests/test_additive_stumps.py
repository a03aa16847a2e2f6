"""
Tests for Additive Stumps under the original-feature cap.
"""

import numpy as np
import pytest

from src.core.errors import CapInfeasibleError, DegenerateLabelError
from src.core.records import LabeledData
from src.core.stumps import aggregate_contribution, expand
from src.trainers.additive_stumps import feasible_grid, fit_additive_stumps
from src.trainers.config import TrainConfig


def test_fit_respects_the_cap(history_data):
    model = fit_additive_stumps(history_data, config=TrainConfig(max_features=1))
    assert len(model.used_features) <= 1
    assert set(model.curves) == set(model.used_features)


def test_uses_both_features_when_allowed(history_data):
    model = fit_additive_stumps(history_data, config=TrainConfig(max_features=2), c_grid=[1.0])
    assert model.used_features == ["age_at_current_charge", "p_arrest"]
    assert model.min_feasible_c == 1.0


def test_cap_infeasible(history_data):
    with pytest.raises(CapInfeasibleError):
        fit_additive_stumps(history_data, config=TrainConfig(max_features=1), c_grid=[1e3])


def test_margin_is_intercept_plus_contributions(history_data):
    model = fit_additive_stumps(history_data, c_grid=[1.0])
    stumps = expand(history_data.X, model.basis).frame[model.logistic.columns]
    margins = model.logistic.decision_function(stumps)
    coefficients = model.logistic.nonzero
    for i in range(0, len(history_data), 37):
        row = history_data.X.iloc[i]
        total = model.logistic.intercept + sum(
            aggregate_contribution(coefficients, feature, row[feature])
            for feature in model.used_features
        )
        assert margins[i] == pytest.approx(total)


def test_curves_follow_stump_directions(history_data):
    model = fit_additive_stumps(history_data, c_grid=[1.0])
    arrests = dict(model.curves["p_arrest"])
    ages = dict(model.curves["age_at_current_charge"])
    # More priors and younger ages carry more risk in this data.
    assert arrests[5.0] > arrests[0.0]
    assert ages[20.0] > ages[60.0]


def test_predictions_are_probabilities(history_data):
    model = fit_additive_stumps(history_data)
    probabilities = model.predict_proba(history_data.X)
    assert probabilities.shape == (len(history_data),)
    assert ((probabilities > 0) & (probabilities < 1)).all()


def test_feasible_grid_drops_weak_penalties(history_data):
    config = TrainConfig(max_features=1)
    model = fit_additive_stumps(history_data, config=config)
    grid = feasible_grid(history_data, None, config)
    assert grid and max(grid) == model.min_feasible_c


def test_single_class_labels(history_data):
    data = LabeledData(X=history_data.X, y=np.zeros(len(history_data), dtype=int))
    with pytest.raises(DegenerateLabelError):
        fit_additive_stumps(data)
