"""
Services layer for file IO and data generation.

This package contains:
- CSV record and schema IO
- Synthetic region populations
- Run artifacts (model files and manifests), imported from
  src.services.artifacts directly since it depends on the trainers
"""

from .data_io import load_csv, load_schema, shared_schema, write_csv
from .synthetic import SynthConfig, synthesize

__all__ = [
    "SynthConfig",
    "load_csv",
    "load_schema",
    "shared_schema",
    "synthesize",
    "write_csv",
]
