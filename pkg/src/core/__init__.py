"""
Core domain models and pure logic for the recidivism toolkit.

This package contains:
- Records, schemas and the twelve outcome labels
- Scoring tables and their text format
- The two PSA tables
- Stump bases and the featurization they drive
- The error hierarchy
"""

from .errors import RecidivismError
from .labels import build_labels
from .psa import score_psa_nca, score_psa_nvca
from .records import BUILTIN_SCHEMAS, LABEL_NAMES, LabeledData, Record, RecordSet, Schema
from .scoring import ScoringTable, evaluate_table, parse_table, serialize_table
from .stumps import StumpBasis, default_basis, expand

__all__ = [
    "BUILTIN_SCHEMAS",
    "LABEL_NAMES",
    "LabeledData",
    "Record",
    "RecordSet",
    "RecidivismError",
    "Schema",
    "ScoringTable",
    "StumpBasis",
    "build_labels",
    "default_basis",
    "evaluate_table",
    "expand",
    "parse_table",
    "score_psa_nca",
    "score_psa_nvca",
    "serialize_table",
]
