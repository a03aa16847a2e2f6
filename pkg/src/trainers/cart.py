"""
CART decision trees grown greedily by information gain.

Splits take the form `feature <= v` with v ranging over the distinct values
observed at a node (the largest excluded). Among equal gains the lowest
feature index wins, then the smallest threshold. A node becomes a leaf when
it is pure, at the maximum depth, has no valid split, or its best gain falls
below `min_gain`.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.stats import entropy

from src.core.errors import RecidivismError
from src.core.records import LabeledData
from src.core.scoring import format_threshold
from src.trainers.config import TrainConfig

logger = logging.getLogger(__name__)

_TIE = 1e-12


class CartNode(BaseModel):
    """
    One tree node; a leaf when feature is None.

    Attributes:
        probability: Fraction of positive training examples reaching the node
        n_samples: Training examples reaching the node
        feature: Split feature (internal nodes only)
        threshold: Examples with feature <= threshold go left
        left / right: Children
    """

    model_config = ConfigDict(frozen=True)

    probability: float
    n_samples: int
    feature: Optional[str] = None
    threshold: Optional[float] = None
    left: Optional["CartNode"] = None
    right: Optional["CartNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth, self.right.depth)

    def leaves(self) -> List["CartNode"]:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()


class CartModel(BaseModel):
    """A fitted tree plus the depth limit it was grown under."""

    model_config = ConfigDict(frozen=True)

    root: CartNode
    features: List[str]
    max_depth: int

    @property
    def depth(self) -> int:
        return self.root.depth

    def predict_proba(self, X: pd.DataFrame) -> np.ndarray:
        values = X[self.features].to_numpy(dtype=float)
        index = {name: j for j, name in enumerate(self.features)}
        out = np.empty(len(values))
        for i, row in enumerate(values):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[index[node.feature]] <= node.threshold else node.right
            out[i] = node.probability
        return out

    def dump(self) -> str:
        """Indented text rendering, one node per line."""
        lines: List[str] = []

        def walk(node: CartNode, indent: int, prefix: str) -> None:
            pad = "  " * indent
            if node.is_leaf:
                lines.append(f"{pad}{prefix}leaf p={node.probability:.4f} n={node.n_samples}")
                return
            test = f"{node.feature} <= {format_threshold(node.threshold)}"
            lines.append(f"{pad}{prefix}split {test} n={node.n_samples}")
            walk(node.left, indent + 1, "yes: ")
            walk(node.right, indent + 1, "no:  ")

        walk(self.root, 0, "")
        return "\n".join(lines) + "\n"


def _node_entropy(positives: np.ndarray, totals: np.ndarray) -> np.ndarray:
    p = np.divide(positives, totals, out=np.zeros_like(positives, dtype=float), where=totals > 0)
    return entropy(np.vstack([p, 1.0 - p]), base=2, axis=0)


def best_split(values: np.ndarray, y: np.ndarray) -> Optional[Tuple[int, float, float]]:
    """
    Highest-gain split over every feature and distinct-value threshold.

    Returns:
        (feature index, threshold, gain), or None when every feature is constant
    """
    n = len(y)
    parent = float(_node_entropy(np.array([y.sum()]), np.array([n]))[0])
    best: Optional[Tuple[int, float, float]] = None
    for j in range(values.shape[1]):
        order = np.argsort(values[:, j], kind="stable")
        column = values[order, j]
        labels = y[order]
        # Candidate cut after position i when the next value differs.
        cuts = np.flatnonzero(column[:-1] < column[1:])
        if cuts.size == 0:
            continue
        left_n = cuts + 1.0
        left_pos = np.cumsum(labels)[cuts]
        right_n = n - left_n
        right_pos = y.sum() - left_pos
        children = (
            left_n * _node_entropy(left_pos, left_n) + right_n * _node_entropy(right_pos, right_n)
        ) / n
        gains = parent - children
        k = int(np.argmax(gains >= gains.max() - _TIE))
        gain, threshold = float(gains[k]), float(column[cuts[k]])
        if best is None or gain > best[2] + _TIE:
            best = (j, threshold, gain)
    return best


def _grow(
    values: np.ndarray,
    y: np.ndarray,
    features: List[str],
    depth: int,
    max_depth: int,
    min_gain: float,
) -> CartNode:
    probability = float(y.mean())
    leaf = CartNode(probability=probability, n_samples=len(y))
    if depth >= max_depth or y.min() == y.max():
        return leaf
    split = best_split(values, y)
    if split is None or split[2] < min_gain:
        return leaf
    j, threshold, gain = split
    mask = values[:, j] <= threshold
    logger.debug("depth %d: split %s <= %g (gain %.4f)", depth, features[j], threshold, gain)
    return CartNode(
        probability=probability,
        n_samples=len(y),
        feature=features[j],
        threshold=threshold,
        left=_grow(values[mask], y[mask], features, depth + 1, max_depth, min_gain),
        right=_grow(values[~mask], y[~mask], features, depth + 1, max_depth, min_gain),
    )


def fit_cart(
    data: LabeledData, config: TrainConfig = TrainConfig(), max_depth: Optional[int] = None
) -> CartModel:
    """
    Grow a CART tree.

    Args:
        data: Features and binary labels
        config: Supplies max_depth and min_gain
        max_depth: Override config.max_depth

    Returns:
        CartModel whose leaves hold the empirical positive fraction

    Raises:
        RecidivismError: No training examples

    Example:
        >>> data = LabeledData(X=pd.DataFrame({"x": [1, 2, 3, 4]}), y=np.array([0, 0, 1, 1]))
        >>> fit_cart(data, max_depth=1).dump().splitlines()[0]
        'split x <= 2 n=4'
    """
    if len(data) == 0:
        raise RecidivismError("cannot grow a tree on zero examples")
    depth = config.max_depth if max_depth is None else max_depth
    features = list(data.X.columns)
    values = data.X.to_numpy(dtype=float)
    root = _grow(values, data.y.astype(float), features, 0, depth, config.min_gain)
    return CartModel(root=root, features=features, max_depth=depth)
