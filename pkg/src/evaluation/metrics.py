"""
Rank-based AUC.
"""

from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from src.core.errors import UndefinedAUCError


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """
    Area under the ROC curve as a rank statistic.

    Equals P(S+ > S-) + 0.5 * P(S+ = S-) over all positive/negative pairs,
    computed in O(n log n) from midranks.

    Args:
        scores: Real-valued scores, higher meaning more risk
        labels: Binary labels aligned with scores

    Returns:
        AUC in [0, 1]

    Raises:
        UndefinedAUCError: Labels contain a single class

    Example:
        >>> auc([0.9, 0.8, 0.1], [1, 1, 0])
        1.0
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise UndefinedAUCError(f"{len(s)} scores but {len(y)} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC needs at least one positive and one negative label")
    ranks = rankdata(s, method="average")
    rank_sum = float(ranks[y].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
