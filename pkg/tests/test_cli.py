"""
End-to-end tests for the recid command line.
"""

import json

import pandas as pd
import pytest

from src.cli.main import COMMANDS, main
from src.core.scoring import parse_table, table_from_json
from src.services.artifacts import manifest_path, read_manifest

CV_CONFIG = "c_grid=0.1,1\nmax_depth_grid=1,2\nfolds=3\ninner_folds=3\n"


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthetic Kentucky and Broward files plus a small CV config."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--output", str(root / "ke.csv"), "--n", "300", "--seed", "1"]) == 0
    assert (
        main(
            [
                "synth",
                "--output",
                str(root / "br.csv"),
                "--region",
                "broward",
                "--n",
                "300",
                "--seed",
                "2",
            ]
        )
        == 0
    )
    (root / "cv.env").write_text(CV_CONFIG)
    return root


def test_synth_writes_records_and_manifest(workspace):
    frame = pd.read_csv(workspace / "ke.csv")
    assert len(frame) == 300
    assert frame["person_id"].iloc[0] == "ke000000"
    manifest = read_manifest(manifest_path(workspace / "ke.csv"))
    assert manifest.command == "synth"
    assert manifest.seed == 1
    assert manifest.outputs == [str(workspace / "ke.csv")]


def test_featurize_then_train_stumps_on_the_basis(workspace, tmp_path):
    stumps = tmp_path / "stumps.csv"
    assert main(["featurize", "--input", str(workspace / "ke.csv"), "--output", str(stumps)]) == 0
    matrix = pd.read_csv(stumps)
    assert len(matrix) == 300
    assert set(matrix.stack().unique()) <= {0, 1}
    basis = stumps.with_suffix(".basis")
    assert basis.exists()

    config = tmp_path / "stumps.env"
    config.write_text("max_features=50\nstumps_c_grid=0.1\n")
    model = tmp_path / "model.csv"
    args = ["train", "--model", "stumps", "--input", str(workspace / "ke.csv")]
    args += ["--output", str(model), "--basis", str(basis), "--config", str(config)]
    assert main(args) == 0
    assert (tmp_path / "model.curves.csv").exists()
    assert str(basis) in read_manifest(manifest_path(model)).inputs


@pytest.mark.parametrize("kind", ["l1", "l2", "cart"])
def test_train_baselines(workspace, tmp_path, kind):
    output = tmp_path / f"{kind}.out"
    args = ["train", "--model", kind, "--input", str(workspace / "ke.csv")]
    assert main(args + ["--output", str(output)]) == 0
    text = output.read_text()
    if kind == "cart":
        assert text.startswith(("split", "leaf"))
    else:
        assert pd.read_csv(output)["column"].iloc[0] == "(intercept)"


def test_train_riskslim(workspace, tmp_path):
    config = tmp_path / "riskslim.env"
    config.write_text("max_selected_stumps=3\nscreening_c_grid=0.001,0.01,0.1\n")
    output = tmp_path / "table.txt"
    args = ["train", "--model", "riskslim", "--input", str(workspace / "ke.csv")]
    args += ["--output", str(output), "--config", str(config)]
    assert main(args) == 0
    table = parse_table(output.read_text())
    assert len(table.rows) <= 3
    assert (tmp_path / "table.txt.txt").exists()
    assert table_from_json((tmp_path / "table.txt.json").read_text()) == table
    assert read_manifest(manifest_path(output)).config == str(config)


def test_cv_is_reproducible_and_feeds_the_audit(workspace, tmp_path):
    outputs = []
    for name in ("first.csv", "again.csv"):
        output = tmp_path / name
        args = ["cv", "--model", "l1,cart", "--input", str(workspace / "ke.csv")]
        args += ["--output", str(output), "--config", str(workspace / "cv.env"), "--seed", "5"]
        assert main(args) == 0
        outputs.append(output)
    first, again = outputs
    assert first.with_suffix(".json").read_bytes() == again.with_suffix(".json").read_bytes()

    summary = pd.read_csv(first)
    assert summary["model"].tolist() == ["l1", "cart"]
    assert "performance_range" in summary.columns
    assert summary["mean_auc"].between(0, 1).all()

    results = json.loads(first.with_suffix(".json").read_text())
    assert [len(r["fold_aucs"]) + len(r["skipped"]) for r in results] == [3, 3]

    scores = first.with_suffix(".scores.csv")
    frame = pd.read_csv(scores)
    assert (frame["model"] == "l1").sum() == (frame["model"] == "cart").sum() == 300
    assert set(frame["label_name"]) == {"general_two_year"}

    audit = tmp_path / "audit.json"
    args = ["audit", "--input", str(scores), "--output", str(audit), "--attribute", "sex"]
    args += ["--thresholds", "min_cell_count=5"]
    assert main(args) == 2
    assert main(args + ["--model", "forest"]) == 2
    assert main(args + ["--model", "l1", "--label", "general_two_year"]) == 0
    report = json.loads(audit.read_text())
    assert report["kind"] == "probability"
    assert report["thresholds"]["min_cell_count"] == 5
    assert set(report["groups"]) <= {"Male", "Female"}
    assert audit.with_suffix(".curves.csv").exists()


def test_audit_raw_scores_with_exclusions(tmp_path):
    rows = [
        {"score": s, "label": int(i % (s + 2) == 0), "race": g}
        for g in ("A", "B")
        for i, s in enumerate([0, 1, 2, 3] * 40)
    ]
    rows += [{"score": 1, "label": 0, "race": "Tiny"}]
    scored = tmp_path / "scored.csv"
    pd.DataFrame(rows).to_csv(scored, index=False)
    output = tmp_path / "audit.json"
    args = ["audit", "--input", str(scored), "--output", str(output), "--attribute", "race"]
    assert main(args + ["--exclude-groups", "Tiny"]) == 0
    report = json.loads(output.read_text())
    assert report["kind"] == "raw"
    assert report["excluded_groups"] == ["Tiny"]
    assert report["balance"]["threshold"] == 0.4


def test_psa(workspace, tmp_path):
    output = tmp_path / "psa.csv"
    assert main(["psa", "--input", str(workspace / "ke.csv"), "--output", str(output)]) == 0
    frame = pd.read_csv(output)
    assert len(frame) == 300
    assert frame["nca_scaled"].between(1, 6).all()
    assert set(frame["nvca_flag"]) <= {0, 1}
    assert "general_two_year" in frame.columns


def test_xregion(workspace, tmp_path):
    output = tmp_path / "xregion.json"
    args = ["xregion", "--input", str(workspace / "ke.csv"), "--target", str(workspace / "br.csv")]
    args += ["--model", "l2", "--output", str(output), "--config", str(workspace / "cv.env")]
    assert main(args) == 0
    result = json.loads(output.read_text())
    assert (result["source"], result["target"]) == ("kentucky", "broward")
    assert "ADE" not in result["features"]
    assert len(result["target_aucs"]) == 3
    manifest = read_manifest(manifest_path(output))
    assert str(workspace / "br.csv") in manifest.inputs


def _no_outcomes(tmp_path):
    path = tmp_path / "quiet.csv"
    lines = ["person_id,race,age_at_current_charge,p_arrest,events"]
    lines += [f"q{i},A,{20 + i},{i % 3}," for i in range(20)]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_user_errors_exit_two(workspace, tmp_path, small_schema_file):
    ke = str(workspace / "ke.csv")
    out = str(tmp_path / "out")
    quiet = str(_no_outcomes(tmp_path))
    bad_basis = tmp_path / "bad.basis"
    bad_basis.write_text("p_arrest increasing 1,2\nage_at_current_charge sideways 30\n")
    empty = tmp_path / "empty.csv"
    empty.write_text("")

    cases = [
        ["train", "--model", "l1", "--input", quiet, "--output", out]
        + ["--schema", str(small_schema_file)],
        ["train", "--model", "l1", "--input", str(tmp_path / "absent.csv"), "--output", out],
        ["train", "--model", "stumps", "--input", ke, "--output", out, "--basis", str(bad_basis)],
        ["psa", "--input", str(empty), "--output", out],
        ["psa", "--input", quiet, "--output", out, "--schema", str(small_schema_file)],
        ["cv", "--model", "forest", "--input", ke, "--output", out],
        ["train", "--model", "forest", "--input", ke, "--output", out],
        ["train", "--input", ke],
        ["train", "--model", "l1", "--input", ke, "--output", out, "--config", out + ".env"],
    ]
    for argv in cases:
        assert main(argv) == 2, argv


def test_disjoint_regions_exit_two(tmp_path, small_schema_file):
    other = tmp_path / "other_schema.csv"
    other.write_text("name,dtype,role\nperson_id,str,id\nrace,str,sensitive\nq,int,feature\n")
    target = tmp_path / "other.csv"
    target.write_text("person_id,race,q\nz1,A,1\n")
    source = _no_outcomes(tmp_path)
    args = ["xregion", "--input", str(source), "--schema", str(small_schema_file)]
    args += ["--target", str(target), "--target-schema", str(other)]
    args += ["--model", "l1", "--output", str(tmp_path / "x.json")]
    assert main(args) == 2


def test_bad_seed_environment(workspace, tmp_path, monkeypatch):
    monkeypatch.setenv("RECID_SEED", "abc")
    args = ["psa", "--input", str(workspace / "ke.csv"), "--output", str(tmp_path / "p.csv")]
    assert main(args) == 2


def test_internal_failure_exits_one(workspace, tmp_path, monkeypatch):
    def broken(args):
        raise RuntimeError("boom")

    monkeypatch.setitem(COMMANDS, "psa", broken)
    args = ["psa", "--input", str(workspace / "ke.csv"), "--output", str(tmp_path / "p.csv")]
    assert main(args) == 1
    assert not manifest_path(tmp_path / "p.csv").exists()
