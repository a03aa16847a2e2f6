"""
Tests for label construction from later charges.
"""

import pytest
from pydantic import ValidationError

from src.core.labels import SIX_MONTH_DAYS, TWO_YEAR_DAYS, build_labels
from src.core.records import LABEL_NAMES, ChargeEvent, LabelSet


def _event(offset, tags=(), level="other", convicted=True):
    return ChargeEvent(offset_days=offset, tags=frozenset(tags), level=level, convicted=convicted)


def test_no_events_all_negative():
    assert build_labels([]).as_dict() == {name: 0 for name in LABEL_NAMES}


def test_horizon_boundaries_are_inclusive():
    at_six = build_labels([_event(SIX_MONTH_DAYS)])
    assert at_six.general_six_month and at_six.general_two_year

    after_six = build_labels([_event(SIX_MONTH_DAYS + 1)])
    assert not after_six.general_six_month and after_six.general_two_year

    at_two = build_labels([_event(TWO_YEAR_DAYS)])
    assert at_two.general_two_year

    after_two = build_labels([_event(TWO_YEAR_DAYS + 1)])
    assert not after_two.general_two_year


def test_types_come_from_tags_and_level():
    labels = build_labels([_event(400, tags={"drug", "violent"}, level="felony")])
    assert labels.drug_two_year and labels.violent_two_year and labels.felony_two_year
    assert labels.general_two_year
    assert not labels.property_two_year and not labels.misdemeanor_two_year
    assert not labels.drug_six_month


def test_convicted_only_ignores_unconvicted_charges():
    events = [_event(10, tags={"property"}, convicted=False), _event(500, level="misdemeanor")]
    everything = build_labels(events)
    convicted = build_labels(events, convicted_only=True)
    assert everything.property_six_month
    assert not convicted.property_two_year
    assert convicted.misdemeanor_two_year and not convicted.general_six_month


def test_six_month_implies_two_year():
    with pytest.raises(ValidationError):
        LabelSet(violent_six_month=True)
    labels = build_labels([_event(0, tags={"violent", "property", "drug"}, level="felony")])
    for name, value in labels.as_dict().items():
        if name.endswith("six_month") and value:
            assert labels.as_dict()[name.replace("six_month", "two_year")] == 1


def test_negative_offset_rejected():
    with pytest.raises(ValidationError):
        ChargeEvent(offset_days=-1)
