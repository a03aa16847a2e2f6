"""
Public Safety Assessment scorers: New Criminal Activity (NCA) and New
Violent Criminal Activity (NVCA).

Both scorers are expressed as ScoringTables over named record fields, so
multi-valued factors ("prior violent convictions: 0 / 1-2 / 3+") become a
pair of stacked single-comparison rows. Field names are configurable
through PsaFields for data sets that name the inputs differently.
"""

from typing import Dict, Mapping, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict

from src.core.records import Record
from src.core.scoring import Condition, ScoringTable, TableRow, evaluate_table

# Total NCA points -> scaled score (1-6)
NCA_SCALE: Dict[int, int] = {
    0: 1,
    1: 2,
    2: 2,
    3: 3,
    4: 3,
    5: 4,
    6: 4,
    7: 5,
    8: 5,
    9: 6,
    10: 6,
    11: 6,
    12: 6,
    13: 6,
}
NCA_MAX_POINTS = 13
NVCA_MAX_POINTS = 7
NVCA_FLAG_POINTS = 4


class PsaFields(BaseModel):
    """Record field names feeding the PSA risk factors."""

    model_config = ConfigDict(frozen=True)

    age: str = "age_at_current_charge"
    pending_charge: str = "current_pending_charge"
    prior_misdemeanor: str = "p_misdemeanor"
    prior_felony: str = "p_felony"
    prior_violent: str = "p_violence"
    prior_fta: str = "p_fta_two_year"
    prior_incarceration: str = "p_incarceration"
    current_violent: str = "current_violence"
    current_violent20: str = "current_violence20"
    prior_conviction: str = "psa_prior_conviction"


def _row(feature: str, op: str, threshold: float, points: int) -> TableRow:
    return TableRow(condition=Condition(feature=feature, op=op, threshold=threshold), points=points)


class PsaNcaModel(BaseModel):
    """
    NCA: seven risk factors, 0-13 points, scaled to 1-6.

    Attributes:
        table: The points table over record fields
        scale: Total points -> scaled score
    """

    model_config = ConfigDict(frozen=True)

    table: ScoringTable
    scale: Dict[int, int] = NCA_SCALE

    @classmethod
    def build(cls, fields: PsaFields = PsaFields()) -> "PsaNcaModel":
        rows = [
            _row(fields.age, "<=", 22, 2),
            _row(fields.pending_charge, ">=", 1, 3),
            _row(fields.prior_misdemeanor, ">=", 1, 1),
            _row(fields.prior_felony, ">=", 1, 1),
            _row(fields.prior_violent, ">=", 1, 1),
            _row(fields.prior_violent, ">=", 3, 1),
            _row(fields.prior_fta, ">=", 1, 1),
            _row(fields.prior_fta, ">=", 2, 1),
            _row(fields.prior_incarceration, ">=", 1, 2),
        ]
        table = ScoringTable(title="PSA New Criminal Activity", rows=rows, coef_range=(0, 3))
        return cls(table=table)


class PsaNvcaModel(BaseModel):
    """
    NVCA: five risk factors, 0-7 points, flagged when points reach 4.

    The "current violent offense and 20 years or younger" factor reads the
    derived current_violence20 field rather than combining two conditions.
    """

    model_config = ConfigDict(frozen=True)

    table: ScoringTable
    flag_points: int = NVCA_FLAG_POINTS

    @classmethod
    def build(cls, fields: PsaFields = PsaFields()) -> "PsaNvcaModel":
        rows = [
            _row(fields.current_violent, ">=", 1, 2),
            _row(fields.current_violent20, ">=", 1, 1),
            _row(fields.pending_charge, ">=", 1, 1),
            _row(fields.prior_conviction, ">=", 1, 1),
            _row(fields.prior_violent, ">=", 1, 1),
            _row(fields.prior_violent, ">=", 3, 1),
        ]
        table = ScoringTable(
            title="PSA New Violent Criminal Activity", rows=rows, coef_range=(0, 3)
        )
        return cls(table=table)


_NCA = PsaNcaModel.build()
_NVCA = PsaNvcaModel.build()

RecordLike = Union[Record, Mapping[str, object]]


def check_psa_fields(
    names: Sequence[str], nca: PsaNcaModel = _NCA, nvca: PsaNvcaModel = _NVCA
) -> None:
    """Raise SchemaError for the first field either PSA table reads that is not in names."""
    nca.table.check_schema(names)
    nvca.table.check_schema(names)


def score_psa_nca(record: RecordLike, model: PsaNcaModel = _NCA) -> Tuple[int, int]:
    """
    Score the NCA factors for one record.

    Returns:
        (raw_points, scaled): raw in [0, 13], scaled in [1, 6]

    Raises:
        SchemaError: A factor's input field is missing

    Example:
        >>> score_psa_nca({"age_at_current_charge": 22, "current_pending_charge": 1, ...})
        (5, 4)
    """
    raw, _ = evaluate_table(model.table, record)
    return raw, model.scale[raw]


def score_psa_nvca(record: RecordLike, model: PsaNvcaModel = _NVCA) -> Tuple[int, bool]:
    """
    Score the NVCA factors for one record.

    Returns:
        (raw_points, flag): raw in [0, 7]; flag is True iff raw >= 4
    """
    raw, _ = evaluate_table(model.table, record)
    return raw, raw >= model.flag_points
