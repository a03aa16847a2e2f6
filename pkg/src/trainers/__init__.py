"""
Trainers for the interpretable model families.

- config: TrainConfig, loaded from flat key=value files
- logistic: l1/l2 penalized logistic regression
- additive_stumps: l1 logistic regression on stumps under a feature cap
- riskslim: integer scoring systems by screening plus exact search
- cart: information-gain decision trees
- router: model kind -> trainer
"""

from src.trainers.additive_stumps import AdditiveStumpsModel, fit_additive_stumps
from src.trainers.cart import CartModel, CartNode, fit_cart
from src.trainers.config import TrainConfig
from src.trainers.logistic import LogisticModel, fit_logistic
from src.trainers.riskslim import (
    RiskSlimModel,
    fit_riskslim_lite,
    riskslim_growth,
    solve_integer_lattice,
)
from src.trainers.router import MODEL_KINDS, Trainer, make_trainer

__all__ = [
    "AdditiveStumpsModel",
    "CartModel",
    "CartNode",
    "LogisticModel",
    "MODEL_KINDS",
    "RiskSlimModel",
    "TrainConfig",
    "Trainer",
    "fit_additive_stumps",
    "fit_cart",
    "fit_logistic",
    "fit_riskslim_lite",
    "make_trainer",
    "riskslim_growth",
    "solve_integer_lattice",
]
