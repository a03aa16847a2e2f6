"""
Penalized logistic regression.

Minimises

    sum_i w_i * log(1 + exp(-s_i * (x_i . beta + b))) + (1 / C) * R(beta)

with s_i = 2 y_i - 1, R the l1 norm or half the squared l2 norm, and an
unpenalized intercept b. The solver is proximal gradient with
Barzilai-Borwein trial steps and backtracking; a step is accepted only
under the sufficient-decrease condition, so the objective never increases
between iterations beyond float rounding. Convergence is declared on the first-order
(sub)gradient optimality residual.
"""

import logging
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.special import expit

from src.core.errors import DegenerateLabelError, RecidivismError
from src.trainers.config import TrainConfig

logger = logging.getLogger(__name__)

Matrix = Union[np.ndarray, pd.DataFrame]


class LogisticModel(BaseModel):
    """
    A fitted (penalized) logistic regression.

    Coefficients and intercept are on the scale of the input columns, even
    when the fit itself ran on standardised columns.

    Attributes:
        columns: Input column names, aligned with coefficients
        coefficients: One real coefficient per column
        intercept: Unpenalized intercept
        penalty: 'l1' or 'l2'
        C: Inverse penalty strength
        class_weight: 'none' or 'balanced'
        converged: Whether the optimality residual reached the tolerance
        n_iter: Iterations used
        residual: Final optimality residual (on the fitted scale)
        objective_history: Objective value after every iteration
    """

    model_config = ConfigDict(frozen=True)

    columns: List[str]
    coefficients: List[float]
    intercept: float
    penalty: Literal["l1", "l2"]
    C: float
    class_weight: Literal["none", "balanced"]
    converged: bool
    n_iter: int
    residual: float
    objective_history: List[float] = []

    def decision_function(self, X: Matrix) -> np.ndarray:
        values = _as_array(X, self.columns)
        return values @ np.asarray(self.coefficients) + self.intercept

    def predict_proba(self, X: Matrix) -> np.ndarray:
        return expit(self.decision_function(X))

    @property
    def nonzero(self) -> Dict[str, float]:
        return {c: w for c, w in zip(self.columns, self.coefficients) if w != 0.0}

    def coefficient_frame(self) -> pd.DataFrame:
        rows = [("(intercept)", self.intercept)] + list(zip(self.columns, self.coefficients))
        return pd.DataFrame(rows, columns=["column", "coefficient"])


def _as_array(X: Matrix, columns: Optional[Sequence[str]] = None) -> np.ndarray:
    if isinstance(X, pd.DataFrame):
        if columns is not None:
            X = X[list(columns)]
        return X.to_numpy(dtype=float)
    return np.asarray(X, dtype=float)


def class_weights(y: np.ndarray, mode: str = "balanced") -> np.ndarray:
    """Per-example weights; 'balanced' gives class c the weight n / (2 * n_c)."""
    if mode == "none":
        return np.ones(len(y))
    n = len(y)
    n_pos = y.sum()
    n_neg = n - n_pos
    return np.where(y == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))


def logistic_loss_and_gradient(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, beta: np.ndarray, intercept: float
) -> Tuple[float, np.ndarray, float]:
    """
    Weighted logistic loss and its gradient.

    Returns:
        (loss, gradient w.r.t. beta, gradient w.r.t. the intercept)
    """
    signs = 2.0 * y - 1.0
    margins = X @ beta + intercept
    loss = float(np.sum(weights * np.logaddexp(0.0, -signs * margins)))
    residual = -weights * signs * expit(-signs * margins)
    return loss, X.T @ residual, float(residual.sum())


def _penalty(beta: np.ndarray, penalty: str) -> float:
    if penalty == "l1":
        return float(np.abs(beta).sum())
    return 0.5 * float(beta @ beta)


def _prox(beta: np.ndarray, step: float, lam: float, penalty: str) -> np.ndarray:
    if penalty == "l1":
        return np.sign(beta) * np.maximum(np.abs(beta) - step * lam, 0.0)
    return beta / (1.0 + step * lam)


def optimality_residual(
    gradient: np.ndarray, gradient_intercept: float, beta: np.ndarray, lam: float, penalty: str
) -> float:
    """
    First-order optimality residual.

    For l1, zero coefficients need |g_j| <= lam and nonzero ones need
    g_j + lam * sign(beta_j) = 0; for l2, g_j + lam * beta_j = 0. The
    intercept gradient must vanish.
    """
    if penalty == "l1":
        zero = beta == 0.0
        parts = np.where(
            zero,
            np.maximum(np.abs(gradient) - lam, 0.0),
            np.abs(gradient + lam * np.sign(beta)),
        )
    else:
        parts = np.abs(gradient + lam * beta)
    worst = float(parts.max()) if parts.size else 0.0
    return max(worst, abs(gradient_intercept))


def _solve(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    lam: float,
    penalty: str,
    tol: float,
    max_iter: int,
) -> Tuple[np.ndarray, float, bool, int, float, List[float]]:
    n, p = X.shape
    beta = np.zeros(p)
    # Weighted log-odds: the exact minimiser when every coefficient is zero.
    pos = weights[y == 1].sum()
    neg = weights[y == 0].sum()
    intercept = float(np.log(pos / neg))

    augmented = np.hstack([X, np.ones((n, 1))]) * np.sqrt(weights)[:, None]
    lipschitz = 0.25 * np.linalg.norm(augmented, 2) ** 2
    base_step = 1.0 / max(lipschitz, 1e-12)

    loss, grad, grad_b = logistic_loss_and_gradient(X, y, weights, beta, intercept)
    objective = loss + lam * _penalty(beta, penalty)
    history = [objective]
    residual = optimality_residual(grad, grad_b, beta, lam, penalty)
    step = base_step
    previous = None

    for iteration in range(1, max_iter + 1):
        if residual <= tol:
            return beta, intercept, True, iteration - 1, residual, history
        if previous is not None:
            d_beta = beta - previous[0]
            d_b = intercept - previous[1]
            d_g = grad - previous[2]
            d_gb = grad_b - previous[3]
            curvature = float(d_beta @ d_g + d_b * d_gb)
            if curvature > 0:
                step = float((d_beta @ d_beta + d_b * d_b) / curvature)
                step = min(max(step, base_step), 1e6 * base_step)
        while True:
            candidate = _prox(beta - step * grad, step, lam, penalty)
            candidate_b = intercept - step * grad_b
            new_loss, new_grad, new_grad_b = logistic_loss_and_gradient(
                X, y, weights, candidate, candidate_b
            )
            move = candidate - beta
            move_b = candidate_b - intercept
            bound = (
                loss
                + float(grad @ move)
                + grad_b * move_b
                + (float(move @ move) + move_b * move_b) / (2.0 * step)
            )
            new_objective = new_loss + lam * _penalty(candidate, penalty)
            slack = 1e-12 * max(1.0, abs(objective))
            if new_loss <= bound + slack and new_objective <= objective + slack:
                break
            step *= 0.5
            if step < 1e-3 * base_step:
                # Numerically stalled; stay at the current point.
                logger.debug("line search stalled at iteration %d", iteration)
                return beta, intercept, residual <= tol, iteration, residual, history
        previous = (beta, intercept, grad, grad_b)
        beta, intercept = candidate, candidate_b
        loss, grad, grad_b = new_loss, new_grad, new_grad_b
        objective = new_objective
        history.append(objective)
        residual = optimality_residual(grad, grad_b, beta, lam, penalty)

    return beta, intercept, residual <= tol, max_iter, residual, history


def _check_inputs(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] != len(y):
        raise RecidivismError(f"X has shape {X.shape} but y has {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise RecidivismError("X contains non-finite values")
    if not np.isin(y, (0, 1)).all():
        raise RecidivismError("labels must be 0/1")
    if y.min() == y.max():
        raise DegenerateLabelError(f"labels contain a single class ({int(y[0])})")


def fit_logistic(
    X: Matrix,
    y: Sequence[int],
    config: TrainConfig = TrainConfig(),
    C: Optional[float] = None,
    standardize: Optional[bool] = None,
) -> LogisticModel:
    """
    Fit a penalized logistic regression.

    Args:
        X: Feature matrix (DataFrame column names are kept)
        y: Binary labels
        config: Penalty kind, class weighting, tolerance and iteration cap
        C: Inverse penalty strength (defaults to the largest value in config.c_grid)
        standardize: Override config.standardize (stump inputs are never standardised)

    Returns:
        LogisticModel on the original column scale

    Raises:
        DegenerateLabelError: y has one class
        RecidivismError: non-finite X or non-binary y
    """
    if isinstance(X, pd.DataFrame):
        columns = list(X.columns)
    else:
        columns = [f"x{j}" for j in range(np.shape(X)[1])]
    values = _as_array(X)
    labels = np.asarray(y, dtype=float)
    _check_inputs(values, labels)
    C = C if C is not None else max(config.c_grid)
    standardize = config.standardize if standardize is None else standardize

    if standardize:
        means = values.mean(axis=0)
        scales = values.std(axis=0)
        scales[scales == 0] = 1.0
        fitted = (values - means) / scales
    else:
        fitted = values

    weights = class_weights(labels, config.class_weight)
    beta, intercept, converged, n_iter, residual, history = _solve(
        fitted, labels, weights, 1.0 / C, config.penalty, config.tol, config.max_iter
    )
    if not converged:
        logger.warning(
            "logistic solver stopped after %d iterations with residual %.3g (tol %.3g)",
            n_iter,
            residual,
            config.tol,
        )
    if standardize:
        beta = beta / scales
        intercept = intercept - float(beta @ means)

    return LogisticModel(
        columns=columns,
        coefficients=[float(v) for v in beta],
        intercept=float(intercept),
        penalty=config.penalty,
        C=float(C),
        class_weight=config.class_weight,
        converged=converged,
        n_iter=n_iter,
        residual=residual,
        objective_history=history,
    )


def objective_value(model: LogisticModel, X: Matrix, y: Sequence[int]) -> float:
    """Penalized objective of a fitted model on unstandardised inputs."""
    values = _as_array(X, model.columns if isinstance(X, pd.DataFrame) else None)
    labels = np.asarray(y, dtype=float)
    weights = class_weights(labels, model.class_weight)
    beta = np.asarray(model.coefficients)
    loss, _, _ = logistic_loss_and_gradient(values, labels, weights, beta, model.intercept)
    return loss + _penalty(beta, model.penalty) / model.C
