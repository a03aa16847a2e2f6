"""
Cross-region generalization: train in one region, test in another.

Both record sets are restricted to the features their schemas share. The
source is cut into folds; each rotation tunes on the remaining source folds,
refits, and scores both the whole target set and the held-out source fold.
"""

import json
import logging
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import RecidivismError, SchemaError
from src.core.records import RecordSet
from src.evaluation.cross_validation import (
    SkippedFold,
    assign_folds,
    select_params,
    split_fold,
)
from src.evaluation.metrics import auc
from src.services.data_io import shared_schema

if TYPE_CHECKING:
    from src.trainers.router import Trainer

logger = logging.getLogger(__name__)


class XRegionResult(BaseModel):
    """
    Per-rotation AUCs of source-trained models.

    Attributes:
        source / target: Region (schema) names
        label: Label predicted
        model: Model kind
        features: Shared features used
        target_aucs: AUC on the full target set, per scored rotation
        source_aucs: AUC on the held-out source fold, per scored rotation
        best_params: Winning hyperparameters per scored rotation
        skipped: Rotations left out, with reasons
    """

    model_config = ConfigDict(frozen=True)

    source: str
    target: str
    label: str
    model: str
    features: List[str]
    target_aucs: List[float]
    source_aucs: List[float]
    best_params: List[Dict[str, Any]]
    skipped: List[SkippedFold] = Field(default_factory=list)

    @property
    def mean_target(self) -> float:
        return float(np.mean(self.target_aucs)) if self.target_aucs else float("nan")

    @property
    def mean_source(self) -> float:
        return float(np.mean(self.source_aucs)) if self.source_aucs else float("nan")

    @property
    def drop(self) -> float:
        """Mean source-holdout AUC minus mean target AUC."""
        return self.mean_source - self.mean_target

    def to_json(self) -> str:
        payload = self.model_dump()
        payload.update(
            mean_target_auc=self.mean_target, mean_source_auc=self.mean_source, auc_drop=self.drop
        )
        return json.dumps(payload, indent=2, sort_keys=True)


def cross_region(
    source: RecordSet,
    target: RecordSet,
    trainer: "Trainer",
    label: str,
    grid: Optional[Sequence[Dict[str, Any]]] = None,
    seed: int = 0,
    folds: int = 5,
    inner_folds: int = 5,
    stratify: bool = False,
) -> XRegionResult:
    """
    Train on source folds, test on the whole target and the source holdout.

    Raises:
        SchemaError: The schemas share no features
    """
    features = shared_schema(source.schema, target.schema)
    if not features:
        raise SchemaError(
            f"schemas '{source.schema.name}' and '{target.schema.name}' share no features"
        )
    logger.info("cross-region on %d shared features", len(features))
    source_data = source.labeled(label, features)
    target_data = target.labeled(label, features)

    rotations = assign_folds(len(source_data), folds, seed, source_data.y if stratify else None)
    target_aucs: List[float] = []
    source_aucs: List[float] = []
    chosen: List[Dict[str, Any]] = []
    skipped: List[SkippedFold] = []
    for i in range(len(rotations)):
        train, holdout = split_fold(source_data, rotations, i)
        try:
            points = grid if grid is not None else trainer.grid(train)
            params = select_params(trainer, train, points, inner_folds, seed + i + 1, stratify)
            model = trainer.fit(train, params)
            on_target = auc(model.predict_proba(target_data.X), target_data.y)
            on_source = auc(model.predict_proba(holdout.X), holdout.y)
        except RecidivismError as e:
            logger.warning("rotation %d skipped: %s", i, e)
            skipped.append(SkippedFold(fold=i, reason=str(e)))
            continue
        logger.info(
            "rotation %d: target AUC %.4f, source holdout AUC %.4f", i, on_target, on_source
        )
        target_aucs.append(on_target)
        source_aucs.append(on_source)
        chosen.append(params)

    return XRegionResult(
        source=source.schema.name,
        target=target.schema.name,
        label=label,
        model=getattr(trainer, "kind", type(trainer).__name__),
        features=features,
        target_aucs=target_aucs,
        source_aucs=source_aucs,
        best_params=chosen,
        skipped=skipped,
    )
