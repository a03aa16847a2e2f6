"""
Group fairness audits for risk scores.

Three audits over one sensitive attribute:
- calibration: per-bin positive fraction by group (group calibration) and
  on the pooled curve (monotonic calibration)
- bpc_bnc: mean score among true positives / true negatives by group
- bg_auc: AUC by group

Thresholds live in FairnessThresholds and are carried into every report;
comparisons never use literals of their own.
"""

import json
import logging
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.core.errors import AuditUndefinedError, ConfigError, SchemaError, UndefinedAUCError
from src.core.records import LABEL_NAMES, RecordSet
from src.evaluation.metrics import auc

logger = logging.getLogger(__name__)

ScoreKind = Literal["probability", "raw"]

_EPS = 1e-12


class FairnessThresholds(BaseModel):
    """
    Verdict thresholds.

    Attributes:
        calibration_gap: Max per-bin positive-fraction gap between groups
        balance_probability: BPC/BNC gap allowed for probability scores
        balance_raw: BPC/BNC gap allowed for raw integer scores
        bg_auc: Max per-group AUC range
        min_cell_count: Bins with fewer records are shown but left out of verdicts
        monotonic_tolerance: Adjacent-bin decrease tolerated on the pooled curve
        probability_bins: Equal-width bins for probability scores
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    calibration_gap: float = Field(0.03, ge=0)
    balance_probability: float = Field(0.03, ge=0)
    balance_raw: float = Field(0.4, ge=0)
    bg_auc: float = Field(0.03, ge=0)
    min_cell_count: int = Field(30, ge=1)
    monotonic_tolerance: float = Field(0.01, ge=0)
    probability_bins: int = Field(10, ge=1)

    def balance_threshold(self, kind: ScoreKind) -> float:
        return self.balance_probability if kind == "probability" else self.balance_raw

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "FairnessThresholds":
        unknown = sorted(set(values) - set(cls.model_fields))
        if unknown:
            raise ConfigError(f"unknown threshold key(s): {', '.join(unknown)}")
        try:
            return cls(**{k: v for k, v in values.items() if v is not None})
        except ValidationError as e:
            first = e.errors()[0]
            raise ConfigError(f"invalid threshold '{first['loc'][0]}': {first['msg']}")

    @classmethod
    def parse(cls, spec: Union[str, Path, None]) -> "FairnessThresholds":
        """From None (defaults), a key=value file, or an inline 'key=value,key=value' string."""
        if spec is None:
            return cls()
        path = Path(spec)
        if path.is_file():
            return cls.from_mapping(dotenv_values(path))
        values = {}
        for item in str(spec).split(","):
            if not item.strip():
                continue
            if "=" not in item:
                raise ConfigError(f"expected key=value in thresholds, got '{item.strip()}'")
            key, value = item.split("=", 1)
            values[key.strip()] = value.strip()
        return cls.from_mapping(values)


class GroupedScores(BaseModel):
    """
    Scores, labels and one sensitive attribute's group per record.

    Attributes:
        scores: Probability or raw integer score per record
        labels: Binary outcome per record
        groups: Group value per record
        kind: 'probability' or 'raw'
    """

    model_config = ConfigDict(frozen=True)

    scores: List[float]
    labels: List[int]
    groups: List[str]
    kind: ScoreKind = "probability"

    @model_validator(mode="after")
    def _aligned(self) -> "GroupedScores":
        if not self.scores:
            raise ValueError("no scored records")
        if not len(self.scores) == len(self.labels) == len(self.groups):
            raise ValueError("scores, labels and groups must have equal length")
        if any(v not in (0, 1) for v in self.labels):
            raise ValueError("labels must be 0/1")
        if self.kind == "probability" and any(not 0.0 <= s <= 1.0 for s in self.scores):
            raise ValueError("probability scores must lie in [0, 1]")
        return self

    @classmethod
    def from_arrays(
        cls, scores, labels, groups, kind: ScoreKind = "probability"
    ) -> "GroupedScores":
        return cls(
            scores=[float(s) for s in scores],
            labels=[int(v) for v in labels],
            groups=[str(g) for g in groups],
            kind=kind,
        )

    @property
    def group_names(self) -> List[str]:
        return sorted(set(self.groups))

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"score": self.scores, "label": self.labels, "group": self.groups})

    def without(self, excluded: Iterable[str]) -> "GroupedScores":
        drop = set(excluded)
        keep = [i for i, g in enumerate(self.groups) if g not in drop]
        if not keep:
            raise AuditUndefinedError("every group was excluded")
        return GroupedScores(
            scores=[self.scores[i] for i in keep],
            labels=[self.labels[i] for i in keep],
            groups=[self.groups[i] for i in keep],
            kind=self.kind,
        )


class CalibrationCell(BaseModel):
    group: str
    bin: str
    low: float
    high: float
    count: int
    positive_fraction: float
    low_count: bool


class CalibrationResult(BaseModel):
    """Per-group and pooled curves with both calibration verdicts."""

    cells: List[CalibrationCell]
    pooled: List[CalibrationCell]
    bin_gaps: Dict[str, float]
    max_gap: Optional[float]
    failing_bins: List[str]
    group_calibrated: Optional[bool]
    monotonic: Optional[bool]
    worst_decrease: float
    group_monotonic: Dict[str, Optional[bool]] = Field(default_factory=dict)


class PairGap(BaseModel):
    group_a: str
    group_b: str
    gap: float


class ClassBalanceResult(BaseModel):
    """BPC (positive class) and BNC (negative class) means and pairwise gaps."""

    means: Dict[str, Dict[str, float]]
    positive_gaps: List[PairGap]
    negative_gaps: List[PairGap]
    max_positive_gap: float
    max_negative_gap: float
    threshold: float
    bpc_satisfied: bool
    bnc_satisfied: bool
    insufficient_cells: List[str]


class GroupAucResult(BaseModel):
    aucs: Dict[str, float]
    range: float
    satisfied: bool
    threshold: float
    excluded_groups: List[str]


class FairnessReport(BaseModel):
    """Everything one audit run produced, with the thresholds that decided it."""

    attribute: str
    kind: ScoreKind
    groups: List[str]
    excluded_groups: List[str]
    thresholds: FairnessThresholds
    calibration: CalibrationResult
    balance: ClassBalanceResult
    bg_auc: GroupAucResult
    flags: List[str]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True)

    def curve_frame(self) -> pd.DataFrame:
        """Calibration curves (per group plus 'ALL') as a flat table for plotting."""
        rows = [c.model_dump() for c in self.calibration.cells + self.calibration.pooled]
        return pd.DataFrame(rows, columns=list(CalibrationCell.model_fields))

    def verdicts(self) -> Dict[str, Optional[bool]]:
        return {
            "group_calibration": self.calibration.group_calibrated,
            "monotonic_calibration": self.calibration.monotonic,
            "bpc": self.balance.bpc_satisfied,
            "bnc": self.balance.bnc_satisfied,
            "bg_auc": self.bg_auc.satisfied,
        }


def gap_satisfied(gap: float, threshold: float) -> bool:
    """True when a reported gap is within its threshold."""
    return gap <= threshold + _EPS


def max_pairwise_gap(values: Mapping[str, float]) -> Tuple[float, List[PairGap]]:
    pairs = [
        PairGap(group_a=a, group_b=b, gap=abs(values[a] - values[b]))
        for a, b in combinations(sorted(values), 2)
    ]
    return max((p.gap for p in pairs), default=0.0), pairs


def balance_verdict(
    gaps: Sequence[float], kind: ScoreKind, thresholds: FairnessThresholds = FairnessThresholds()
) -> bool:
    """Verdict for already-computed BPC or BNC gaps."""
    threshold = thresholds.balance_threshold(kind)
    return all(gap_satisfied(g, threshold) for g in gaps)


def auc_range_verdict(
    aucs: Mapping[str, float], thresholds: FairnessThresholds = FairnessThresholds()
) -> Tuple[float, bool]:
    """(max - min AUC, satisfied) for already-computed per-group AUCs."""
    if not aucs:
        raise AuditUndefinedError("no group has an AUC")
    spread = max(aucs.values()) - min(aucs.values())
    return spread, gap_satisfied(spread, thresholds.bg_auc)


def _bins(
    scores: np.ndarray, kind: ScoreKind, n_bins: int
) -> Tuple[np.ndarray, List[Tuple[str, float, float]]]:
    if kind == "raw":
        values = np.unique(scores)
        index = np.searchsorted(values, scores)
        return index, [(format(v, "g"), float(v), float(v)) for v in values]
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    index = np.minimum((scores * n_bins).astype(int), n_bins - 1)
    names = [f"[{edges[b]:.2f},{edges[b + 1]:.2f}]" for b in range(n_bins)]
    return index, [(names[b], edges[b], edges[b + 1]) for b in range(n_bins)]


def _cells(frame: pd.DataFrame, bins, group: str, min_count: int) -> List[CalibrationCell]:
    cells = []
    counts = frame.groupby("bin")["label"].agg(["count", "mean"])
    for b, row in counts.iterrows():
        name, low, high = bins[int(b)]
        cells.append(
            CalibrationCell(
                group=group,
                bin=name,
                low=low,
                high=high,
                count=int(row["count"]),
                positive_fraction=float(row["mean"]),
                low_count=int(row["count"]) < min_count,
            )
        )
    return cells


def _worst_decrease(cells: Sequence[CalibrationCell]) -> Tuple[float, int]:
    """Largest drop between adjacent sufficient bins, and how many bins counted."""
    curve = [c.positive_fraction for c in cells if not c.low_count]
    return max((a - b for a, b in zip(curve, curve[1:])), default=0.0), len(curve)


def calibration(
    grouped: GroupedScores, thresholds: FairnessThresholds = FairnessThresholds()
) -> CalibrationResult:
    """
    Group and monotonic calibration.

    Raw scores bin by distinct value; probabilities into equal-width bins.
    A bin enters the group verdict when at least two groups have
    min_cell_count records in it; the verdict holds when every such bin's
    largest between-group gap is within calibration_gap. The pooled curve is
    monotonic when no adjacent sufficient bins decrease by more than
    monotonic_tolerance; each group curve gets the same check. A verdict
    with no eligible bins is None.

    Raises:
        AuditUndefinedError: Every bin is empty
    """
    frame = grouped.frame()
    scores = frame["score"].to_numpy(dtype=float)
    index, bins = _bins(scores, grouped.kind, thresholds.probability_bins)
    frame["bin"] = index
    if frame.empty:
        raise AuditUndefinedError("every calibration bin is empty")

    cells: List[CalibrationCell] = []
    for group in grouped.group_names:
        cells.extend(_cells(frame[frame["group"] == group], bins, group, thresholds.min_cell_count))
    pooled = _cells(frame, bins, "ALL", thresholds.min_cell_count)

    bin_gaps: Dict[str, float] = {}
    for name in [b[0] for b in bins]:
        eligible = {
            c.group: c.positive_fraction for c in cells if c.bin == name and not c.low_count
        }
        if len(eligible) >= 2:
            bin_gaps[name] = max_pairwise_gap(eligible)[0]
    failing = [
        b for b, gap in bin_gaps.items() if not gap_satisfied(gap, thresholds.calibration_gap)
    ]
    if not bin_gaps:
        logger.warning(
            "no calibration bin has two groups with %d+ records", thresholds.min_cell_count
        )

    def monotone(curve: Sequence[CalibrationCell]) -> Optional[bool]:
        worst, points = _worst_decrease(curve)
        return gap_satisfied(worst, thresholds.monotonic_tolerance) if points >= 2 else None

    group_monotonic = {
        group: monotone([c for c in cells if c.group == group]) for group in grouped.group_names
    }
    worst, _ = _worst_decrease(pooled)
    return CalibrationResult(
        cells=cells,
        pooled=pooled,
        bin_gaps=bin_gaps,
        max_gap=max(bin_gaps.values()) if bin_gaps else None,
        failing_bins=failing,
        group_calibrated=(not failing) if bin_gaps else None,
        monotonic=monotone(pooled),
        worst_decrease=max(worst, 0.0),
        group_monotonic=group_monotonic,
    )


def bpc_bnc(
    grouped: GroupedScores, thresholds: FairnessThresholds = FairnessThresholds()
) -> ClassBalanceResult:
    """
    Balance for the positive and negative class.

    Empty (group, class) cells are flagged and left out of that class's gaps.

    Example:
        >>> g = GroupedScores.from_arrays([0.6, 0.8, 0.7, 0.7], [1, 1, 1, 1], ["A", "A", "B", "B"])
        >>> bpc_bnc(g).max_positive_gap
        0.0
    """
    frame = grouped.frame()
    threshold = thresholds.balance_threshold(grouped.kind)
    means: Dict[str, Dict[str, float]] = {}
    insufficient: List[str] = []
    per_class: Dict[int, Dict[str, float]] = {0: {}, 1: {}}
    for group in grouped.group_names:
        means[group] = {}
        for label, name in ((1, "positive"), (0, "negative")):
            cell = frame[(frame["group"] == group) & (frame["label"] == label)]["score"]
            if cell.empty:
                insufficient.append(f"{group}/{name}")
                logger.warning("group '%s' has no %s examples; not in the verdict", group, name)
                continue
            means[group][name] = float(cell.mean())
            per_class[label][group] = float(cell.mean())
    max_pos, pos_gaps = max_pairwise_gap(per_class[1])
    max_neg, neg_gaps = max_pairwise_gap(per_class[0])
    return ClassBalanceResult(
        means=means,
        positive_gaps=pos_gaps,
        negative_gaps=neg_gaps,
        max_positive_gap=max_pos,
        max_negative_gap=max_neg,
        threshold=threshold,
        bpc_satisfied=gap_satisfied(max_pos, threshold),
        bnc_satisfied=gap_satisfied(max_neg, threshold),
        insufficient_cells=insufficient,
    )


def bg_auc(
    grouped: GroupedScores, thresholds: FairnessThresholds = FairnessThresholds()
) -> GroupAucResult:
    """
    Per-group AUC and its range.

    Groups with a single class are excluded with a warning.

    Raises:
        AuditUndefinedError: No group has both classes
    """
    frame = grouped.frame()
    aucs: Dict[str, float] = {}
    excluded: List[str] = []
    for group in grouped.group_names:
        rows = frame[frame["group"] == group]
        try:
            aucs[group] = auc(rows["score"], rows["label"])
        except UndefinedAUCError:
            excluded.append(group)
            logger.warning("group '%s' has a single class; excluded from BG-AUC", group)
    spread, satisfied = auc_range_verdict(aucs, thresholds)
    return GroupAucResult(
        aucs=aucs,
        range=spread,
        satisfied=satisfied,
        threshold=thresholds.bg_auc,
        excluded_groups=excluded,
    )


def audit(
    grouped: GroupedScores,
    attribute: str,
    thresholds: FairnessThresholds = FairnessThresholds(),
    exclude_groups: Sequence[str] = (),
) -> FairnessReport:
    """
    Run all three audits.

    Args:
        grouped: Scores, labels and groups
        attribute: Name of the sensitive attribute (for the report)
        thresholds: Verdict thresholds
        exclude_groups: Groups dropped before auditing (e.g. a very small group)
    """
    excluded = sorted(set(exclude_groups) & set(grouped.groups))
    if excluded:
        grouped = grouped.without(excluded)
    report_calibration = calibration(grouped, thresholds)
    balance = bpc_bnc(grouped, thresholds)
    per_group = bg_auc(grouped, thresholds)

    flags = [
        f"low count: {c.group} bin {c.bin} (n={c.count})"
        for c in report_calibration.cells
        if c.low_count
    ]
    flags += [
        f"non-monotone calibration: {group}"
        for group, verdict in report_calibration.group_monotonic.items()
        if verdict is False
    ]
    flags += [f"empty cell: {cell}" for cell in balance.insufficient_cells]
    flags += [f"single class: {g}" for g in per_group.excluded_groups]
    return FairnessReport(
        attribute=attribute,
        kind=grouped.kind,
        groups=grouped.group_names,
        excluded_groups=excluded,
        thresholds=thresholds,
        calibration=report_calibration,
        balance=balance,
        bg_auc=per_group,
        flags=flags,
    )


def base_rates(
    records: RecordSet, attribute: str, labels: Sequence[str] = LABEL_NAMES
) -> pd.DataFrame:
    """
    Positive fraction of each label within each group.

    Returns:
        DataFrame indexed by group (sorted), one column per label

    Raises:
        SchemaError: Unknown attribute or label
    """
    groups = records.groups(attribute)
    columns = {}
    for label in labels:
        columns[label] = records.label_vector(label)
    frame = pd.DataFrame(columns)
    frame[attribute] = groups
    if frame.empty:
        raise SchemaError("no records to compute base rates from")
    return frame.groupby(attribute)[list(labels)].mean().sort_index()
