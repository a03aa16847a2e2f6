"""
Nested cross-validation harness.

Outer folds give held-out AUC estimates; on each outer training set an
inner k-fold grid search picks the hyperparameters, which are then refit on
the whole outer training set. Folds with a single class are logged and
skipped, never imputed.
"""

import json
import logging
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import ConfigError, RecidivismError
from src.core.records import LabeledData
from src.evaluation.metrics import auc

if TYPE_CHECKING:
    from src.trainers.router import Trainer

logger = logging.getLogger(__name__)

Params = Dict[str, Any]


class SkippedFold(BaseModel):
    """An outer fold (or inner grid point) that could not be scored."""

    fold: int
    reason: str


class CVResult(BaseModel):
    """
    Outcome of one nested cross-validation run.

    Attributes:
        label: Label the models predict
        model: Model kind
        fold_aucs: Test AUC per scored outer fold
        folds: Outer fold indices that were scored, aligned with fold_aucs
        best_params: Winning hyperparameters per scored fold
        skipped: Folds left out of the summary, with reasons
        holdout_scores: Pooled (row, fold, score, label) holdout predictions
    """

    model_config = ConfigDict(frozen=True)

    label: str
    model: str
    fold_aucs: List[float]
    folds: List[int]
    best_params: List[Params]
    skipped: List[SkippedFold] = Field(default_factory=list)
    holdout_scores: List[Tuple[int, int, float, int]] = Field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_aucs)) if self.fold_aucs else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.fold_aucs)) if self.fold_aucs else float("nan")

    def summary_row(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "model": self.model,
            "mean_auc": self.mean,
            "std_auc": self.std,
        }

    def to_json(self) -> str:
        payload = self.model_dump()
        payload["mean_auc"] = self.mean
        payload["std_auc"] = self.std
        return json.dumps(payload, indent=2, sort_keys=True)


def summary_frame(results: Sequence[CVResult]) -> pd.DataFrame:
    """CSV-ready rows label,model,mean_auc,std_auc, with a per-label performance range."""
    columns = ["label", "model", "mean_auc", "std_auc"]
    frame = pd.DataFrame([r.summary_row() for r in results], columns=columns)
    if len({r.model for r in results}) > 1:
        spread = frame.groupby("label")["mean_auc"].agg(lambda s: s.max() - s.min())
        frame["performance_range"] = frame["label"].map(spread)
    return frame


def assign_folds(
    n: int, k: int, seed: int, labels: Optional[np.ndarray] = None
) -> List[np.ndarray]:
    """
    Seeded fold assignment.

    Indices are shuffled with the seed and cut into k contiguous blocks whose
    sizes differ by at most one. With labels, each class is shuffled and cut
    separately and the blocks merged, so every fold keeps the class mix.

    Returns:
        k sorted index arrays that partition range(n)

    Example:
        >>> [len(f) for f in assign_folds(10, 5, seed=0)]
        [2, 2, 2, 2, 2]
    """
    if k < 2:
        raise ConfigError(f"need at least 2 folds, got {k}")
    if n < k:
        raise ConfigError(f"cannot cut {n} records into {k} folds")
    rng = np.random.default_rng(seed)
    if labels is None:
        blocks = np.array_split(rng.permutation(n), k)
        return [np.sort(b) for b in blocks]
    folds: List[List[int]] = [[] for _ in range(k)]
    for value in np.unique(labels):
        members = np.flatnonzero(labels == value)
        for j, block in enumerate(np.array_split(rng.permutation(members), k)):
            folds[j].extend(block.tolist())
    return [np.sort(np.asarray(f, dtype=int)) for f in folds]


def split_fold(
    data: LabeledData, folds: List[np.ndarray], i: int
) -> Tuple[LabeledData, LabeledData]:
    """Fold i as the test set, the remaining folds as training."""
    test = folds[i]
    train = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != i]))
    return data.subset(train), data.subset(test)


def _fold_auc(trainer: "Trainer", train: LabeledData, test: LabeledData, params: Params) -> float:
    model = trainer.fit(train, params)
    return auc(model.predict_proba(test.X), test.y)


def select_params(
    trainer: "Trainer",
    data: LabeledData,
    grid: Sequence[Params],
    inner_folds: int,
    seed: int,
    stratify: bool = False,
) -> Params:
    """
    Inner grid search: the grid point with the highest mean validation AUC.

    Ties go to the earliest grid point. Inner folds that are degenerate or
    whose fit fails with a domain error are left out of that point's mean.

    Raises:
        ConfigError: Empty grid
        RecidivismError: No grid point could be scored on any inner fold
    """
    if not grid:
        raise ConfigError("hyperparameter grid is empty")
    if len(grid) == 1:
        return dict(grid[0])
    folds = assign_folds(len(data), inner_folds, seed, data.y if stratify else None)
    best: Optional[Tuple[float, Params]] = None
    for params in grid:
        scores = []
        for i in range(len(folds)):
            train, valid = split_fold(data, folds, i)
            try:
                scores.append(_fold_auc(trainer, train, valid, params))
            except RecidivismError as e:
                logger.debug("inner fold %d skipped for %s: %s", i, params, e)
        if not scores:
            continue
        mean = float(np.mean(scores))
        if best is None or mean > best[0]:
            best = (mean, dict(params))
    if best is None:
        raise RecidivismError("no grid point could be scored on the inner folds")
    return best[1]


def nested_cv(
    data: LabeledData,
    trainer: "Trainer",
    grid: Optional[Sequence[Params]] = None,
    seed: int = 0,
    folds: int = 5,
    inner_folds: int = 5,
    stratify: bool = False,
) -> CVResult:
    """
    Five-fold (by default) nested cross-validation.

    Args:
        data: Features and labels
        trainer: Trainer from make_trainer
        grid: Hyperparameter points (defaults to the trainer's grid on each outer train set)
        seed: Seeds outer and inner fold assignment
        folds: Outer fold count
        inner_folds: Inner fold count
        stratify: Stratify folds by label

    Returns:
        CVResult with one AUC per scored outer fold; degenerate folds are skipped
    """
    if grid is not None and not grid:
        raise ConfigError("hyperparameter grid is empty")
    outer = assign_folds(len(data), folds, seed, data.y if stratify else None)
    fold_aucs: List[float] = []
    scored: List[int] = []
    chosen: List[Params] = []
    skipped: List[SkippedFold] = []
    pooled: List[Tuple[int, int, float, int]] = []

    for i in range(len(outer)):
        train, test = split_fold(data, outer, i)
        try:
            points = grid if grid is not None else trainer.grid(train)
            params = select_params(trainer, train, points, inner_folds, seed + i + 1, stratify)
            model = trainer.fit(train, params)
            probabilities = model.predict_proba(test.X)
            value = auc(probabilities, test.y)
        except RecidivismError as e:
            logger.warning("outer fold %d skipped: %s", i, e)
            skipped.append(SkippedFold(fold=i, reason=str(e)))
            continue
        logger.info("fold %d: AUC %.4f with %s", i, value, params)
        fold_aucs.append(value)
        scored.append(i)
        chosen.append(params)
        pooled.extend(
            (int(r), i, float(p), int(t)) for r, p, t in zip(outer[i], probabilities, test.y)
        )

    return CVResult(
        label=data.label,
        model=getattr(trainer, "kind", type(trainer).__name__),
        fold_aucs=fold_aucs,
        folds=scored,
        best_params=chosen,
        skipped=skipped,
        holdout_scores=pooled,
    )
