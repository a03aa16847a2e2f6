"""
Evaluation layer: AUC, nested cross-validation, the cross-region protocol
and group fairness audits.
"""

from .cross_region import XRegionResult, cross_region
from .cross_validation import CVResult, assign_folds, nested_cv, summary_frame
from .fairness import FairnessReport, FairnessThresholds, GroupedScores, audit
from .metrics import auc

__all__ = [
    "CVResult",
    "FairnessReport",
    "FairnessThresholds",
    "GroupedScores",
    "XRegionResult",
    "assign_folds",
    "audit",
    "auc",
    "cross_region",
    "nested_cv",
    "summary_frame",
]
