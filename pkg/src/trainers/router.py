"""
Model-kind router.

Maps a model kind to the trainer that fits it, so the CV harness, the
cross-region protocol and the CLI can treat every model family the same way:

- l1 / l2: penalized logistic regression on raw features (grid over C)
- stumps: Additive Stumps (grid over C, at or below the feasible cap)
- riskslim: RiskSLIM-lite integer scoring system (grid over screened-set size)
- cart: CART tree (grid over max_depth)

Every fitted model exposes predict_proba(X) on a raw feature frame.
"""

import logging
from typing import Any, Dict, List, Optional, Protocol

import numpy as np
import pandas as pd

from src.core.errors import ConfigError
from src.core.records import LabeledData
from src.core.stumps import StumpBasis, default_basis
from src.trainers.additive_stumps import feasible_grid, fit_additive_stumps
from src.trainers.cart import fit_cart
from src.trainers.config import TrainConfig
from src.trainers.logistic import fit_logistic
from src.trainers.riskslim import fit_riskslim_lite

logger = logging.getLogger(__name__)

MODEL_KINDS = ("l1", "l2", "stumps", "riskslim", "cart")

Params = Dict[str, Any]


class FittedModel(Protocol):
    def predict_proba(self, X: pd.DataFrame) -> np.ndarray: ...


class Trainer:
    """Fits one model kind for a given hyperparameter point."""

    kind: str = ""

    def __init__(self, config: TrainConfig, basis: Optional[StumpBasis] = None):
        self.config = config
        self.basis = basis

    def fit(self, data: LabeledData, params: Optional[Params] = None) -> FittedModel:
        raise NotImplementedError

    def grid(self, data: Optional[LabeledData] = None) -> List[Params]:
        raise NotImplementedError

    def _basis(self, data: LabeledData) -> StumpBasis:
        return self.basis if self.basis is not None else default_basis(data.X)


class LogisticTrainer(Trainer):
    def __init__(self, config: TrainConfig, basis=None, penalty: str = "l1"):
        super().__init__(config.with_overrides(penalty=penalty), basis)
        self.kind = penalty

    def fit(self, data, params=None):
        C = (params or {}).get("C")
        return fit_logistic(data.X, data.y, self.config, C=C)

    def grid(self, data=None):
        return [{"C": c} for c in self.config.c_grid]


class StumpsTrainer(Trainer):
    kind = "stumps"

    def fit(self, data, params=None):
        c_grid = [params["C"]] if params and "C" in params else None
        return fit_additive_stumps(data, self._basis(data), self.config, c_grid=c_grid)

    def grid(self, data=None):
        if data is None:
            return [{"C": c} for c in self.config.stumps_c_grid]
        return [{"C": c} for c in feasible_grid(data, self._basis(data), self.config)]


class RiskSlimTrainer(Trainer):
    kind = "riskslim"

    def fit(self, data, params=None):
        size = (params or {}).get("max_selected_stumps")
        return fit_riskslim_lite(data, self._basis(data), self.config, max_selected_stumps=size)

    def grid(self, data=None):
        return [{"max_selected_stumps": k} for k in self.config.riskslim_stump_grid]


class CartTrainer(Trainer):
    kind = "cart"

    def fit(self, data, params=None):
        return fit_cart(data, self.config, max_depth=(params or {}).get("max_depth"))

    def grid(self, data=None):
        return [{"max_depth": d} for d in self.config.max_depth_grid]


def make_trainer(
    kind: str, config: TrainConfig = TrainConfig(), basis: Optional[StumpBasis] = None
) -> Trainer:
    """
    Build the trainer for a model kind.

    Args:
        kind: One of MODEL_KINDS
        config: Training configuration
        basis: Stump basis for stumps/riskslim (derived from training data when None)

    Raises:
        ConfigError: Unknown kind

    Example:
        >>> make_trainer("cart").kind
        'cart'
    """
    kind = kind.strip().lower()
    if kind in ("l1", "l2"):
        return LogisticTrainer(config, basis, penalty=kind)
    if kind == "stumps":
        return StumpsTrainer(config, basis)
    if kind == "riskslim":
        return RiskSlimTrainer(config, basis)
    if kind == "cart":
        return CartTrainer(config, basis)
    raise ConfigError(f"unknown model kind '{kind}' (expected one of {', '.join(MODEL_KINDS)})")
