"""
Tests for the calibration, class-balance and per-group AUC audits.
"""

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from src.core.errors import AuditUndefinedError, ConfigError, SchemaError
from src.evaluation.fairness import (
    FairnessThresholds,
    GroupedScores,
    audit,
    auc_range_verdict,
    balance_verdict,
    base_rates,
    bg_auc,
    bpc_bnc,
    calibration,
    gap_satisfied,
)


def _cell(group, score, count, positives):
    return [(score, 1 if i < positives else 0, group) for i in range(count)]


def _grouped(*cells, kind="probability"):
    rows = [row for cell in cells for row in cell]
    scores, labels, groups = zip(*rows)
    return GroupedScores.from_arrays(scores, labels, groups, kind=kind)


def test_identical_groups_pass_everything():
    grouped = _grouped(
        _cell("A", 0.25, 40, 10),
        _cell("A", 0.75, 40, 30),
        _cell("B", 0.25, 40, 10),
        _cell("B", 0.75, 40, 30),
    )
    report = audit(grouped, "race")
    assert report.calibration.max_gap == 0.0
    assert report.balance.max_positive_gap == 0.0
    assert report.balance.max_negative_gap == 0.0
    assert report.bg_auc.range == 0.0
    assert all(report.verdicts().values())
    assert report.flags == []


def test_calibrated_scores_can_still_fail_class_balance():
    """Different base rates: calibration holds while BPC cannot."""
    grouped = _grouped(
        _cell("A", 0.2, 100, 20),
        _cell("A", 0.6, 40, 24),
        _cell("B", 0.2, 40, 8),
        _cell("B", 0.6, 100, 60),
    )
    result = calibration(grouped)
    assert result.group_calibrated is True
    assert result.monotonic is True
    assert result.max_gap == pytest.approx(0.0, abs=1e-12)

    balance = bpc_bnc(grouped)
    assert balance.means["A"]["positive"] == pytest.approx((20 * 0.2 + 24 * 0.6) / 44)
    assert balance.means["B"]["positive"] == pytest.approx((8 * 0.2 + 60 * 0.6) / 68)
    assert balance.bpc_satisfied is False
    assert balance.bnc_satisfied is False


def test_reported_gaps_against_thresholds():
    for gap in (0.79, 0.61, 0.7, 0.84):
        assert balance_verdict([gap], "raw") is False
    assert balance_verdict([0.39], "raw") is True
    assert balance_verdict([0.04], "probability") is False
    assert balance_verdict([0.02], "probability") is True
    assert auc_range_verdict({"a": 0.700, "b": 0.703}) == (pytest.approx(0.003), True)
    assert auc_range_verdict({"a": 0.690, "b": 0.711})[1] is True
    assert auc_range_verdict({"a": 0.66, "b": 0.72})[1] is False
    assert gap_satisfied(0.73 - 0.70, 0.03)
    with pytest.raises(AuditUndefinedError):
        auc_range_verdict({})


def test_raw_scores_bin_by_value():
    grouped = _grouped(
        _cell("A", 0, 30, 3),
        _cell("A", 2, 30, 15),
        _cell("B", 0, 30, 3),
        _cell("B", 5, 30, 24),
        kind="raw",
    )
    report = audit(grouped, "sex")
    frame = report.curve_frame()
    assert sorted(set(frame["bin"])) == ["0", "2", "5"]
    assert report.balance.threshold == 0.4
    # only bin 0 holds two sufficient groups
    assert list(report.calibration.bin_gaps) == ["0"]
    assert report.calibration.group_calibrated is True
    assert report.calibration.monotonic is True


def test_low_counts_leave_no_verdict():
    grouped = _grouped(_cell("A", 0.3, 5, 1), _cell("B", 0.3, 5, 2))
    result = calibration(grouped)
    assert result.group_calibrated is None
    assert result.monotonic is None
    assert all(c.low_count for c in result.cells)


def test_empty_cells_are_flagged():
    grouped = _grouped(
        _cell("A", 0.2, 40, 10),
        _cell("A", 0.7, 40, 30),
        _cell("C", 0.2, 10, 0),
    )
    report = audit(grouped, "race")
    assert report.balance.insufficient_cells == ["C/positive"]
    assert "empty cell: C/positive" in report.flags
    assert "single class: C" in report.flags
    assert report.bg_auc.excluded_groups == ["C"]
    assert list(report.bg_auc.aucs) == ["A"]


def test_excluded_groups_are_dropped_and_listed():
    grouped = _grouped(
        _cell("A", 0.2, 40, 10),
        _cell("A", 0.7, 40, 30),
        _cell("C", 0.2, 10, 0),
    )
    report = audit(grouped, "race", exclude_groups=["C", "Z"])
    assert report.excluded_groups == ["C"]
    assert report.groups == ["A"]
    assert not any("C" in flag for flag in report.flags)
    with pytest.raises(AuditUndefinedError):
        audit(grouped, "race", exclude_groups=["A", "C"])


def test_bg_auc_needs_one_scorable_group():
    grouped = _grouped(_cell("A", 0.2, 10, 0), _cell("B", 0.4, 10, 10))
    with pytest.raises(AuditUndefinedError):
        bg_auc(grouped)


def test_threshold_parsing(tmp_path):
    assert FairnessThresholds.parse(None) == FairnessThresholds()
    inline = FairnessThresholds.parse("balance_raw=0.5, min_cell_count=10")
    assert inline.balance_raw == 0.5 and inline.min_cell_count == 10
    assert inline.balance_threshold("raw") == 0.5
    assert inline.balance_threshold("probability") == 0.03

    path = tmp_path / "thresholds.env"
    path.write_text("# audit thresholds\nbg_auc=0.05\n")
    assert FairnessThresholds.parse(path).bg_auc == 0.05

    with pytest.raises(ConfigError):
        FairnessThresholds.parse("balance=0.1")
    with pytest.raises(ConfigError):
        FairnessThresholds.parse("min_cell_count=0")
    with pytest.raises(ConfigError):
        FairnessThresholds.parse("bg_auc")


def test_grouped_scores_validation():
    with pytest.raises(ValidationError):
        GroupedScores.from_arrays([0.2, 1.5], [0, 1], ["A", "B"])
    with pytest.raises(ValidationError):
        GroupedScores.from_arrays([0.2, 0.5], [0, 2], ["A", "B"])
    with pytest.raises(ValidationError):
        GroupedScores.from_arrays([0.2, 0.5], [0, 1], ["A"])
    with pytest.raises(ValidationError):
        GroupedScores.from_arrays([], [], [])
    raw = GroupedScores.from_arrays([7, -2], [0, 1], ["A", "B"], kind="raw")
    assert raw.scores == [7.0, -2.0]


def test_base_rates(kentucky):
    rates = base_rates(kentucky, "race", ["general_two_year", "violent_two_year"])
    assert list(rates.columns) == ["general_two_year", "violent_two_year"]
    assert list(rates.index) == sorted(set(kentucky.groups("race")))
    assert ((rates >= 0) & (rates <= 1)).all().all()
    assert (rates["violent_two_year"] <= rates["general_two_year"]).all()
    with pytest.raises(SchemaError):
        base_rates(kentucky, "shoe_size")


def test_equal_base_rates_and_calibration_satisfy_every_audit():
    """Different score mixes, same base rate, exact calibration in every bin."""
    levels = (0.1, 0.3, 0.5, 0.7, 0.9)
    mixes = {"A": (200, 200, 200, 200, 200), "B": (210, 190, 200, 190, 210)}
    cells = [
        _cell(group, level, count, int(round(level * count)))
        for group, counts in mixes.items()
        for level, count in zip(levels, counts)
    ]
    grouped = _grouped(*cells)
    frame = grouped.frame()
    assert frame.groupby("group")["label"].mean().tolist() == [0.5, 0.5]

    report = audit(grouped, "race")
    assert report.calibration.max_gap == pytest.approx(0.0, abs=1e-12)
    assert report.balance.max_positive_gap == pytest.approx(332.4 / 500 - 0.66)
    assert report.balance.max_negative_gap == pytest.approx(0.34 - 167.6 / 500)
    assert report.bg_auc.range == pytest.approx(206_180 / 250_000 - 0.82)
    assert all(report.verdicts().values())
    assert report.flags == []


def test_well_calibrated_scores_track_the_diagonal():
    rng = np.random.default_rng(2024)
    n = 10_000
    scores = rng.random(n)
    labels = (rng.random(n) < scores).astype(int)
    grouped = GroupedScores.from_arrays(scores, labels, rng.choice(["A", "B"], n))
    result = calibration(grouped, FairnessThresholds(probability_bins=5))

    bins = np.minimum((scores * 5).astype(int), 4)
    centres = pd.Series(scores).groupby(bins).mean()
    assert len(result.pooled) == 5
    for index, cell in enumerate(result.pooled):
        assert abs(cell.positive_fraction - centres[index]) <= 0.03
    assert result.monotonic is True


def test_one_diverging_score_value_is_flagged():
    positives = {10: 8, 11: 12, 12: 16, 13: 20, 14: 36}
    cells = [_cell(g, s, 40, k) for g in ("A", "B") for s, k in positives.items() if s != 13]
    grouped = _grouped(*cells, _cell("A", 13, 40, 20), _cell("B", 13, 40, 32), kind="raw")
    result = calibration(grouped)
    assert result.failing_bins == ["13"]
    assert result.bin_gaps["13"] == pytest.approx(0.3)
    assert all(gap == 0.0 for b, gap in result.bin_gaps.items() if b != "13")
    assert result.group_calibrated is False
    assert result.group_monotonic == {"A": True, "B": True}


def test_non_monotone_group_curve_is_flagged():
    grouped = _grouped(
        _cell("A", 0.15, 40, 4),
        _cell("A", 0.55, 40, 24),
        _cell("A", 0.85, 40, 36),
        _cell("B", 0.15, 40, 4),
        _cell("B", 0.55, 40, 32),
        _cell("B", 0.85, 40, 20),
    )
    report = audit(grouped, "sex")
    assert report.calibration.group_monotonic == {"A": True, "B": False}
    assert "non-monotone calibration: B" in report.flags
    assert "non-monotone calibration: A" not in report.flags


def test_class_balance_ignores_group_names():
    rng = np.random.default_rng(6)
    scores = rng.random(300)
    labels = (rng.random(300) < scores).astype(int)
    groups = rng.choice(["A", "B", "C"], 300)
    swapped = np.array([{"A": "B", "B": "A"}.get(g, g) for g in groups])
    before = bpc_bnc(GroupedScores.from_arrays(scores, labels, groups))
    after = bpc_bnc(GroupedScores.from_arrays(scores, labels, swapped))
    assert after.max_positive_gap == pytest.approx(before.max_positive_gap, abs=1e-15)
    assert after.max_negative_gap == pytest.approx(before.max_negative_gap, abs=1e-15)
    assert sorted(g.gap for g in after.positive_gaps) == pytest.approx(
        sorted(g.gap for g in before.positive_gaps)
    )
    assert after.means["A"] == before.means["B"]
    assert after.means["C"] == before.means["C"]


def test_group_aucs_match_pairwise_counts(pairwise_auc):
    rng = np.random.default_rng(15)
    for _ in range(50):
        n = int(rng.integers(8, 30))
        scores = rng.integers(0, 5, n).astype(float)
        labels = rng.integers(0, 2, n)
        groups = rng.choice(["A", "B"], n)
        groups[:4], labels[:4] = ["A", "A", "B", "B"], [0, 1, 0, 1]
        grouped = GroupedScores.from_arrays(scores, labels, groups, kind="raw")
        result = bg_auc(grouped)
        for group, value in result.aucs.items():
            mask = groups == group
            assert value == pytest.approx(pairwise_auc(scores[mask], labels[mask]), abs=1e-12)
        assert sorted(result.aucs) == ["A", "B"]
