"""
Shared fixtures: small synthetic populations and hand-built data sets.
"""

import numpy as np
import pandas as pd
import pytest

from src.core.records import LabeledData
from src.services.synthetic import SynthConfig, synthesize


@pytest.fixture(scope="session")
def kentucky():
    """600 synthetic Kentucky records."""
    return synthesize(SynthConfig.preset("kentucky"), n=600, seed=3)


@pytest.fixture(scope="session")
def broward():
    """600 synthetic Broward records."""
    return synthesize(SynthConfig.preset("broward"), n=600, seed=4)


@pytest.fixture
def history_data():
    """
    Age and prior-arrest counts with risk rising in arrests and falling in age.

    400 rows; both classes well represented.
    """
    rng = np.random.default_rng(7)
    n = 400
    age = rng.integers(18, 61, n)
    arrests = rng.poisson(1.5, n)
    logit = -1.0 + 0.9 * (arrests >= 2) + 0.8 * (age <= 25)
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(int)
    X = pd.DataFrame(
        {"age_at_current_charge": age.astype(float), "p_arrest": arrests.astype(float)}
    )
    return LabeledData(X=X, y=y, label="general_two_year")


@pytest.fixture
def linear_data():
    """200 rows, three standard-normal features, logistic labels."""
    rng = np.random.default_rng(11)
    X = rng.standard_normal((200, 3))
    logit = X @ np.array([1.0, -0.5, 0.0]) + 0.2
    y = (rng.random(200) < 1.0 / (1.0 + np.exp(-logit))).astype(int)
    return X, y


@pytest.fixture
def small_schema_file(tmp_path):
    """Minimal schema declaration: id, race, age, p_arrest and events."""
    path = tmp_path / "small_schema.csv"
    path.write_text(
        "name,dtype,role\n"
        "person_id,str,id\n"
        "race,str,sensitive\n"
        "age_at_current_charge,int,feature\n"
        "p_arrest,int,feature\n"
        "events,events,events\n"
    )
    return path


def _pairwise_auc(scores, labels):
    positives = [s for s, y in zip(scores, labels) if y == 1]
    negatives = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in positives:
        for q in negatives:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(positives) * len(negatives))


@pytest.fixture
def pairwise_auc():
    """Quadratic AUC: each (positive, negative) pair scores 1, ties 0.5."""
    return _pairwise_auc
