"""
Run artifacts: fitted-model files and run manifests.

Each model family is written in its own format:
- RiskSLIM-lite: scoring-table text, the same table as JSON, and a rendered
  .txt for humans
- logistic / Additive Stumps: coefficient CSV (stumps add a contribution-curve CSV)
- CART: indented text dump

Every CLI run also writes one manifest describing how to reproduce it.
"""

import json
import logging
import shlex
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd
from pydantic import BaseModel, Field

from src import __version__
from src.core.scoring import render_table, serialize_table, table_to_json
from src.trainers.additive_stumps import AdditiveStumpsModel
from src.trainers.cart import CartModel
from src.trainers.logistic import LogisticModel
from src.trainers.riskslim import RiskSlimModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class RunManifest(BaseModel):
    """
    How one command was run.

    Attributes:
        command: Subcommand name
        argv: Full argument list; re-running it reproduces the outputs
        config: Config file path, if any
        seed: Seed all randomness flowed from
        inputs: Input paths
        outputs: Output paths written
        timestamp: UTC time the run finished (ISO 8601)
        version: Toolkit version
    """

    command: str
    argv: List[str]
    config: Optional[str] = None
    seed: int
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    version: str = __version__

    @property
    def command_line(self) -> str:
        return "recid " + " ".join(shlex.quote(a) for a in self.argv)


def manifest_path(output: PathLike) -> Path:
    """Manifest location for an output path: '<output>.manifest.json'."""
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def write_manifest(manifest: RunManifest, output: PathLike) -> Path:
    path = manifest_path(output)
    path.write_text(manifest.model_dump_json(indent=2) + "\n")
    logger.debug("manifest written to %s", path)
    return path


def read_manifest(path: PathLike) -> RunManifest:
    return RunManifest.model_validate_json(Path(path).read_text())


def write_json(payload: Union[str, Dict], path: PathLike) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def write_model(model, path: PathLike) -> List[Path]:
    """
    Write a fitted model in its family's format.

    Returns:
        Every path written (the main file first)

    Raises:
        TypeError: Unknown model type
    """
    path = Path(path)
    written = [path]
    if isinstance(model, RiskSlimModel):
        path.write_text(serialize_table(model.table))
        rendered = path.with_name(path.name + ".txt")
        rendered.write_text(render_table(model.table))
        document = path.with_name(path.name + ".json")
        document.write_text(table_to_json(model.table) + "\n")
        written += [rendered, document]
    elif isinstance(model, LogisticModel):
        model.coefficient_frame().to_csv(path, index=False)
    elif isinstance(model, AdditiveStumpsModel):
        model.logistic.coefficient_frame().to_csv(path, index=False)
        curves = path.with_name(path.stem + ".curves.csv")
        rows = [
            {"feature": feature, "value": value, "contribution": contribution}
            for feature, points in model.curves.items()
            for value, contribution in points
        ]
        pd.DataFrame(rows, columns=["feature", "value", "contribution"]).to_csv(curves, index=False)
        written.append(curves)
    elif isinstance(model, CartModel):
        path.write_text(model.dump())
    else:
        raise TypeError(f"cannot write model of type {type(model).__name__}")
    return written
