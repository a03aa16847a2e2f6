"""
Tests for model files and run manifests.
"""

import json

import pandas as pd
import pytest

from src.core.scoring import parse_table, table_from_json
from src.services.artifacts import (
    RunManifest,
    manifest_path,
    read_manifest,
    write_manifest,
    write_model,
)
from src.trainers.additive_stumps import fit_additive_stumps
from src.trainers.cart import fit_cart
from src.trainers.config import TrainConfig
from src.trainers.logistic import fit_logistic
from src.trainers.riskslim import fit_riskslim_lite


def test_manifest_reads_back(tmp_path):
    output = tmp_path / "model.txt"
    manifest = RunManifest(
        command="train",
        argv=["train", "--input", "a b.csv", "--output", str(output)],
        seed=3,
        inputs=["a b.csv"],
        outputs=[str(output)],
    )
    path = write_manifest(manifest, output)
    assert path == manifest_path(output) == tmp_path / "model.txt.manifest.json"
    assert read_manifest(path) == manifest
    assert manifest.command_line.startswith("recid train --input 'a b.csv'")


def test_logistic_and_cart_files(tmp_path, history_data):
    logistic = fit_logistic(history_data.X, history_data.y)
    written = write_model(logistic, tmp_path / "l1.csv")
    frame = pd.read_csv(written[0])
    assert frame["column"].tolist() == ["(intercept)", "age_at_current_charge", "p_arrest"]

    tree = fit_cart(history_data, max_depth=2)
    (path,) = write_model(tree, tmp_path / "cart.txt")
    assert path.read_text() == tree.dump()


def test_riskslim_files(tmp_path, history_data):
    model = fit_riskslim_lite(history_data, config=TrainConfig(max_selected_stumps=2))
    table_path, rendered, document = write_model(model, tmp_path / "table.txt")
    assert parse_table(table_path.read_text()) == model.table
    assert rendered.name == "table.txt.txt"
    assert document.name == "table.txt.json"
    assert table_from_json(document.read_text()) == model.table
    fields = json.loads(document.read_text())
    assert set(fields) == {"rows", "intercept", "coef_range", "offset_range", "title"}
    assert fields["intercept"] == model.table.intercept


def test_stumps_files(tmp_path, history_data):
    model = fit_additive_stumps(history_data, c_grid=[1.0])
    main, curves = write_model(model, tmp_path / "stumps.csv")
    frame = pd.read_csv(curves)
    assert list(frame.columns) == ["feature", "value", "contribution"]
    assert set(frame["feature"]) == set(model.used_features)
    assert main.exists()


def test_unknown_model(tmp_path):
    with pytest.raises(TypeError):
        write_model(object(), tmp_path / "x")
