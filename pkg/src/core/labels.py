"""
Recidivism label construction.

A label is positive when a later charge of the matching type falls inside the
horizon. Horizons are fixed at 183 days (six months) and 730 days (two years);
an event exactly on the boundary day counts.
"""

from typing import Iterable

from src.core.records import ChargeEvent, LabelSet

SIX_MONTH_DAYS = 183
TWO_YEAR_DAYS = 730

TYPE_TAGS = ("violent", "drug", "property")
LEVELS = ("felony", "misdemeanor")


def _event_types(event: ChargeEvent) -> set:
    kinds = {"general"}
    kinds.update(tag for tag in TYPE_TAGS if tag in event.tags)
    if event.level in LEVELS:
        kinds.add(event.level)
    return kinds


def build_labels(events: Iterable[ChargeEvent], convicted_only: bool = False) -> LabelSet:
    """
    Build the twelve labels from a record's later charges.

    Args:
        events: Charges after the current date
        convicted_only: Count only convicted charges (the Kentucky convention);
            otherwise every recorded charge counts (the Broward convention)

    Returns:
        LabelSet: Horizon-nested labels; all zero for an empty event list

    Example:
        >>> event = ChargeEvent(offset_days=400, tags={"drug"}, convicted=True)
        >>> build_labels([event]).drug_two_year
        True
    """
    flags = {}
    for event in events:
        if convicted_only and not event.convicted:
            continue
        if event.offset_days > TWO_YEAR_DAYS:
            continue
        for kind in _event_types(event):
            flags[f"{kind}_two_year"] = True
            if event.offset_days <= SIX_MONTH_DAYS:
                flags[f"{kind}_six_month"] = True
    return LabelSet(**flags)
