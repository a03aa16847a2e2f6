"""
RiskSLIM-lite: integer scoring systems by screening plus exact search.

Stage 1 screens stumps with l1-penalized logistic regression, keeping the
model from the weakest penalty that selects at most `max_selected_stumps`.
Stage 2 searches integer points in `coef_range` and an integer intercept in
`offset_range`, minimising

    mean logistic loss + l0_penalty * (number of nonzero points)

Small lattices are enumerated outright. Larger ones go through best-first
branch and bound over coefficient boxes: each node solves the continuous
relaxation on its box with L-BFGS-B and takes the tangent-plane minimum over
the box as its lower bound (valid for any convex loss, however loosely the
relaxation was solved); rounding the relaxed point gives incumbents.
"""

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.optimize import minimize
from scipy.special import expit

from src.core.errors import ConfigError, NoModelError
from src.core.records import LabeledData
from src.core.scoring import Condition, ScoringTable, TableRow, score_frame
from src.core.stumps import StumpBasis, default_basis, expand, parse_stump_column
from src.evaluation.metrics import auc
from src.trainers.config import TrainConfig
from src.trainers.logistic import fit_logistic

logger = logging.getLogger(__name__)

SearchStatus = Literal["optimal", "gap_reached", "time_limit"]


@dataclass(frozen=True)
class LatticeSolution:
    """Best integer point found by the search, with its certificate."""

    coefficients: np.ndarray
    intercept: int
    objective: float
    lower_bound: float
    gap: float
    nodes: int
    status: SearchStatus


def mean_logistic_loss(margins: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mean logistic loss of each column of margins (n,) or (n, k)."""
    signs = (2.0 * y - 1.0).reshape(-1, *([1] * (margins.ndim - 1)))
    return np.mean(np.logaddexp(0.0, -signs * margins), axis=0)


def best_intercepts(
    margins: np.ndarray, y: np.ndarray, offset_range: Tuple[int, int]
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact integer intercept for each column of margins.

    The loss is convex in the intercept, so the integer optimum is the floor
    or ceiling of the continuous optimum (clipped to the range), which is
    located by vectorised bisection on the derivative mean(expit(m + b)) - mean(y).

    Returns:
        (intercepts, losses), one entry per column
    """
    matrix = margins.reshape(len(y), -1)
    k = matrix.shape[1]
    low, high = float(offset_range[0]), float(offset_range[1])
    target = y.mean()
    lo = np.full(k, low)
    hi = np.full(k, high)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        slope = expit(matrix + mid).mean(axis=0) - target
        lo = np.where(slope < 0, mid, lo)
        hi = np.where(slope < 0, hi, mid)
    centre = 0.5 * (lo + hi)
    floor = np.clip(np.floor(centre), low, high)
    ceil = np.clip(np.ceil(centre), low, high)
    loss_floor = mean_logistic_loss(matrix + floor, y)
    loss_ceil = mean_logistic_loss(matrix + ceil, y)
    pick_ceil = loss_ceil < loss_floor
    intercepts = np.where(pick_ceil, ceil, floor).astype(int)
    losses = np.where(pick_ceil, loss_ceil, loss_floor)
    return intercepts, losses


def _integer_objective(
    Z: np.ndarray, y: np.ndarray, coefficients: np.ndarray, offset_range, l0_penalty: float
) -> Tuple[float, int]:
    margins = Z @ coefficients
    intercepts, losses = best_intercepts(margins, y, offset_range)
    objective = float(losses[0]) + l0_penalty * int(np.count_nonzero(coefficients))
    return objective, int(intercepts[0])


def _enumerate(
    Z: np.ndarray, y: np.ndarray, coef_range, offset_range, l0_penalty: float, chunk: int = 4096
) -> LatticeSolution:
    d = Z.shape[1]
    if d == 0:
        intercepts, losses = best_intercepts(np.zeros((len(y), 1)), y, offset_range)
        objective = float(losses[0])
        return LatticeSolution(
            coefficients=np.zeros(0, dtype=int),
            intercept=int(intercepts[0]),
            objective=objective,
            lower_bound=objective,
            gap=0.0,
            nodes=1,
            status="optimal",
        )
    values = range(coef_range[0], coef_range[1] + 1)
    best = (np.inf, None, 0)
    product = itertools.product(values, repeat=d)
    count = 0
    while True:
        block = np.array(list(itertools.islice(product, chunk)), dtype=float)
        if block.size == 0:
            break
        count += len(block)
        intercepts, losses = best_intercepts(Z @ block.T, y, offset_range)
        objectives = losses + l0_penalty * np.count_nonzero(block, axis=1)
        index = int(np.argmin(objectives))
        if objectives[index] < best[0]:
            best = (float(objectives[index]), block[index].astype(int), int(intercepts[index]))
    objective, coefficients, intercept = best
    return LatticeSolution(
        coefficients=np.asarray(coefficients, dtype=int).reshape(d),
        intercept=intercept,
        objective=objective,
        lower_bound=objective,
        gap=0.0,
        nodes=count,
        status="optimal",
    )


@dataclass(order=True)
class _Node:
    bound: float
    order: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    start: np.ndarray = field(compare=False)


def _relax(
    Z: np.ndarray,
    y: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    offset_range,
    start: np.ndarray,
) -> Tuple[np.ndarray, float]:
    """Continuous relaxation on a box; returns (point, valid lower bound on the loss)."""
    n, d = Z.shape
    design = np.hstack([Z, np.ones((n, 1))])
    signs = 2.0 * y - 1.0

    def loss_and_grad(x):
        margins = design @ x
        loss = float(np.mean(np.logaddexp(0.0, -signs * margins)))
        grad = design.T @ (expit(margins) - y) / n
        return loss, grad

    bounds = list(zip(lower.astype(float), upper.astype(float))) + [
        (float(offset_range[0]), float(offset_range[1]))
    ]
    box_low = np.array([b[0] for b in bounds])
    box_high = np.array([b[1] for b in bounds])
    x0 = np.clip(start, box_low, box_high)
    result = minimize(
        loss_and_grad,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"ftol": 1e-13, "gtol": 1e-10, "maxiter": 500},
    )
    point = np.clip(result.x, box_low, box_high)
    loss, grad = loss_and_grad(point)
    # f(z) >= f(x) + g.(z - x) on the box; its minimum is a sound bound.
    tangent = np.minimum(grad * (box_low - point), grad * (box_high - point)).sum()
    return point, loss + float(tangent)


def _l0_floor(lower: np.ndarray, upper: np.ndarray, l0_penalty: float) -> float:
    return l0_penalty * int(np.count_nonzero((lower > 0) | (upper < 0)))


def _branch_and_bound(
    Z: np.ndarray,
    y: np.ndarray,
    coef_range,
    offset_range,
    l0_penalty: float,
    target_gap: float,
    time_budget: float,
) -> LatticeSolution:
    started = time.monotonic()
    d = Z.shape[1]
    lower = np.full(d, coef_range[0], dtype=int)
    upper = np.full(d, coef_range[1], dtype=int)

    incumbent = np.zeros(d, dtype=int)
    clipped = np.clip(incumbent, lower, upper)
    best_objective, best_intercept = _integer_objective(Z, y, clipped, offset_range, l0_penalty)
    incumbent = clipped

    point, bound = _relax(Z, y, lower, upper, offset_range, np.zeros(d + 1))
    heap = [_Node(bound + _l0_floor(lower, upper, l0_penalty), 0, lower, upper, point)]
    counter = itertools.count(1)
    nodes = 0
    status: SearchStatus = "optimal"

    def gap_of(bound_value: float) -> float:
        if best_objective <= 0:
            return 0.0
        return max(0.0, (best_objective - bound_value) / best_objective)

    while heap:
        if time.monotonic() - started > time_budget:
            status = "time_limit"
            break
        global_bound = heap[0].bound
        if target_gap > 0 and gap_of(global_bound) <= target_gap:
            status = "gap_reached"
            break
        node = heapq.heappop(heap)
        if node.bound >= best_objective - 1e-12:
            continue
        nodes += 1
        point, loss_bound = _relax(Z, y, node.lower, node.upper, offset_range, node.start)
        node_bound = loss_bound + _l0_floor(node.lower, node.upper, l0_penalty)

        rounded = np.clip(np.rint(point[:d]).astype(int), node.lower, node.upper)
        objective, intercept = _integer_objective(Z, y, rounded, offset_range, l0_penalty)
        if objective < best_objective:
            best_objective, best_intercept, incumbent = objective, intercept, rounded
            logger.debug("node %d: incumbent %.10f", nodes, objective)

        if node_bound >= best_objective - 1e-12:
            continue
        free = np.flatnonzero(node.lower < node.upper)
        if free.size == 0:
            continue
        fraction = np.abs(point[free] - np.rint(point[free]))
        if fraction.max() > 1e-9:
            j = int(free[np.argmax(fraction)])
        else:
            widths = node.upper[free] - node.lower[free]
            j = int(free[np.argmax(widths)])
        split = int(np.floor(point[j]))
        split = min(max(split, node.lower[j]), node.upper[j] - 1)

        left_upper = node.upper.copy()
        left_upper[j] = split
        right_lower = node.lower.copy()
        right_lower[j] = split + 1
        for child_lower, child_upper in ((node.lower, left_upper), (right_lower, node.upper)):
            heapq.heappush(heap, _Node(node_bound, next(counter), child_lower, child_upper, point))

    open_bound = heap[0].bound if heap else best_objective
    lower_bound = min(open_bound, best_objective)
    return LatticeSolution(
        coefficients=incumbent,
        intercept=best_intercept,
        objective=best_objective,
        lower_bound=lower_bound,
        gap=gap_of(lower_bound),
        nodes=nodes,
        status=status if heap else "optimal",
    )


def solve_integer_lattice(
    Z: np.ndarray,
    y: np.ndarray,
    coef_range: Tuple[int, int] = (-5, 5),
    offset_range: Tuple[int, int] = (-100, 100),
    l0_penalty: float = 1e-6,
    target_gap: float = 0.05,
    time_budget: float = 1000.0,
    exhaustive_max_lattice: int = 20_000,
) -> LatticeSolution:
    """
    Minimise mean logistic loss + l0_penalty * nnz over integer points.

    Args:
        Z: Binary design matrix (n, d), one column per screened stump
        y: Binary labels
        coef_range: Inclusive integer range for every coefficient
        offset_range: Inclusive integer range for the intercept
        l0_penalty: Penalty per nonzero coefficient
        target_gap: Stop once (best - bound) / best is at most this (0 = prove optimality)
        time_budget: Seconds before stopping with the best incumbent
        exhaustive_max_lattice: Enumerate outright when (range size)^d is at most this

    Raises:
        ConfigError: Empty coefficient or offset range
        NoModelError: No time to produce even the first incumbent
    """
    if coef_range[0] > coef_range[1] or offset_range[0] > offset_range[1]:
        raise ConfigError(f"empty search ranges {coef_range} / {offset_range}")
    if time_budget <= 0:
        raise NoModelError("time budget exhausted before any incumbent was found")
    y = np.asarray(y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1)
    d = Z.shape[1]
    lattice_size = (coef_range[1] - coef_range[0] + 1) ** d
    if lattice_size <= exhaustive_max_lattice:
        return _enumerate(Z, y, coef_range, offset_range, l0_penalty)
    return _branch_and_bound(Z, y, coef_range, offset_range, l0_penalty, target_gap, time_budget)


class RiskSlimModel(BaseModel):
    """
    A fitted RiskSLIM-lite scoring system.

    Attributes:
        table: The integer scoring table over original features
        screened: Stump columns passed to the integer search
        objective: Mean loss + l0 penalty of the table on the training data
        lower_bound: Proven lower bound on the objective
        gap: Relative optimality gap achieved
        nodes: Search nodes (or lattice points) visited
        status: How the search ended
    """

    model_config = ConfigDict(frozen=True)

    table: ScoringTable
    screened: List[str]
    objective: float
    lower_bound: float
    gap: float
    nodes: int
    status: SearchStatus

    def predict_proba(self, X: pd.DataFrame) -> np.ndarray:
        return score_frame(self.table, X)[1]


def screen_stumps(
    stumps: pd.DataFrame, y: np.ndarray, config: TrainConfig, max_selected: int
) -> List[str]:
    """
    Pick at most max_selected stump columns by l1 screening.

    Walks config.screening_c_grid from the weakest penalty down and keeps
    the first model with few enough nonzeros; if every model is too large,
    the strongest-penalty model's largest coefficients are kept.
    """
    if max_selected == 0 or stumps.shape[1] == 0:
        return []
    l1 = config.with_overrides(penalty="l1", class_weight="balanced")
    fallback = None
    for C in sorted(config.screening_c_grid, reverse=True):
        model = fit_logistic(stumps, y, l1, C=C, standardize=False)
        selected = list(model.nonzero)
        if len(selected) <= max_selected:
            logger.debug("screening C=%g keeps %d stumps", C, len(selected))
            return selected
        fallback = model
    ranked = sorted(fallback.nonzero.items(), key=lambda item: -abs(item[1]))
    keep = {column for column, _ in ranked[:max_selected]}
    return [column for column in fallback.columns if column in keep]


def _condition_for(column: str, basis: StumpBasis) -> Condition:
    parsed = parse_stump_column(column)
    if parsed is not None and column not in basis.passthrough:
        feature, op, threshold = parsed
        return Condition(feature=feature, op=op, threshold=threshold)
    return Condition(feature=column, op=">=", threshold=1)


def fit_riskslim_lite(
    data: LabeledData,
    basis: Optional[StumpBasis] = None,
    config: TrainConfig = TrainConfig(),
    max_selected_stumps: Optional[int] = None,
) -> RiskSlimModel:
    """
    Train an integer scoring system.

    Args:
        data: Raw features and labels
        basis: Stump definitions (defaults to default_basis on data.X)
        config: Ranges, l0 penalty, gap target, time budget and screening grid
        max_selected_stumps: Override config.max_selected_stumps

    Returns:
        RiskSlimModel whose table uses points in config.coef_range

    Raises:
        DegenerateLabelError: Labels contain a single class
        NoModelError: Time budget exhausted before an incumbent
        ConfigError: Empty ranges
    """
    basis = basis if basis is not None else default_basis(data.X)
    stumps = expand(data.X, basis).frame
    limit = config.max_selected_stumps if max_selected_stumps is None else max_selected_stumps
    if data.y.min() == data.y.max():
        # Screening raises the degenerate-label error with the usual message.
        fit_logistic(stumps, data.y, config)
    screened = screen_stumps(stumps, data.y, config, limit)

    solution = solve_integer_lattice(
        stumps[screened].to_numpy(dtype=float),
        data.y,
        coef_range=config.coef_range,
        offset_range=config.offset_range,
        l0_penalty=config.l0_penalty,
        target_gap=config.target_gap,
        time_budget=config.time_budget,
        exhaustive_max_lattice=config.exhaustive_max_lattice,
    )
    if solution.status == "time_limit":
        logger.warning(
            "integer search hit the %.0fs budget with gap %.2f%%",
            config.time_budget,
            100 * solution.gap,
        )
    rows = [
        TableRow(condition=_condition_for(column, basis), points=int(points))
        for column, points in zip(screened, solution.coefficients)
        if points != 0
    ]
    table = ScoringTable(
        rows=rows,
        intercept=int(solution.intercept),
        coef_range=tuple(config.coef_range),
        offset_range=tuple(config.offset_range),
    )
    return RiskSlimModel(
        table=table,
        screened=screened,
        objective=solution.objective,
        lower_bound=solution.lower_bound,
        gap=solution.gap,
        nodes=solution.nodes,
        status=solution.status,
    )


def riskslim_growth(
    data: LabeledData,
    basis: Optional[StumpBasis] = None,
    config: TrainConfig = TrainConfig(),
    sizes: Optional[Sequence[int]] = None,
    validation_fraction: float = 0.2,
) -> Tuple[RiskSlimModel, List[Tuple[int, float, str]]]:
    """
    Grow the screened set while the search stays provable and validation AUC improves.

    Sizes are tried in increasing order on a seeded train/validation split;
    growth stops at the first size that either misses the gap target within
    the budget or fails to improve validation AUC. The kept size is refitted
    on all of data.

    Returns:
        (final model, [(size, validation AUC, status) for every size tried])
    """
    sizes = sorted(sizes if sizes is not None else config.riskslim_stump_grid)
    basis = basis if basis is not None else default_basis(data.X)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(data))
    n_valid = max(1, int(round(validation_fraction * len(data))))
    valid, train = data.subset(order[:n_valid]), data.subset(order[n_valid:])

    trace: List[Tuple[int, float, str]] = []
    kept: Optional[int] = None
    best_auc = -np.inf
    for size in sizes:
        model = fit_riskslim_lite(train, basis, config, max_selected_stumps=size)
        value = auc(model.predict_proba(valid.X), valid.y)
        trace.append((size, value, model.status))
        if model.status == "time_limit" or value <= best_auc:
            break
        kept, best_auc = size, value
    if kept is None:
        kept = sizes[0]
    return fit_riskslim_lite(data, basis, config, max_selected_stumps=kept), trace
