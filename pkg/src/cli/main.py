"""
Command-line front end for the recidivism toolkit.

Subcommands, one per experiment family:
- featurize: expand records into a binary stump matrix
- train: fit one model family and write the model file
- cv: nested cross-validation AUC for one or more model kinds and labels
- audit: fairness audits of a scored CSV
- xregion: train in one region, test in another
- psa: score records with the PSA NCA and NVCA tables
- synth: generate a synthetic region population

Every run writes '<output>.manifest.json' next to its output. Exit codes:
0 success, 1 internal failure, 2 user or configuration error.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from src.core.errors import ConfigError, RecidivismError, SchemaError
from src.core.psa import check_psa_fields, score_psa_nca, score_psa_nvca
from src.core.records import LABEL_NAMES, RecordSet
from src.core.stumps import default_basis, expand, parse_basis, serialize_basis
from src.evaluation.cross_region import cross_region
from src.evaluation.cross_validation import nested_cv, summary_frame
from src.evaluation.fairness import FairnessReport, FairnessThresholds, GroupedScores, audit
from src.services.artifacts import RunManifest, write_json, write_manifest, write_model
from src.services.data_io import load_csv, load_schema, write_csv
from src.services.synthetic import SynthConfig, synthesize
from src.trainers.config import TrainConfig
from src.trainers.router import MODEL_KINDS, make_trainer

logger = logging.getLogger("recid")
console = Console()

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USER = 2


def setup_logging(level: Optional[str] = None) -> None:
    """Route library logging through rich at RECID_LOG_LEVEL (default INFO)."""
    level = (level or os.getenv("RECID_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _default_seed() -> int:
    raw = os.getenv("RECID_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"RECID_SEED must be an integer, got '{raw}'")


def _config(args: argparse.Namespace) -> TrainConfig:
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    overrides = {"seed": args.seed}
    if getattr(args, "stratify", False):
        overrides["stratify"] = True
    return config.with_overrides(**overrides)


def _records(path: str, schema: str, convicted_only: bool = False) -> RecordSet:
    return load_csv(path, load_schema(schema), convicted_only=convicted_only)


def _split(value: str, allowed: Sequence[str], what: str) -> List[str]:
    items = [v.strip() for v in value.split(",") if v.strip()]
    if items == ["all"]:
        return list(allowed)
    unknown = [v for v in items if v not in allowed]
    if unknown or not items:
        raise ConfigError(f"unknown {what} '{unknown[0] if unknown else value}'")
    return items


def _basis(path: Optional[str]):
    if not path:
        return None
    if not Path(path).is_file():
        raise ConfigError(f"basis file not found: {path}")
    return parse_basis(Path(path).read_text())


def _manifest(args: argparse.Namespace, argv: Sequence[str], inputs, outputs) -> None:
    manifest = RunManifest(
        command=args.command,
        argv=list(argv),
        config=getattr(args, "config", None),
        seed=args.seed,
        inputs=[str(p) for p in inputs if p],
        outputs=[str(p) for p in outputs],
    )
    write_manifest(manifest, args.output)


def cmd_featurize(args: argparse.Namespace) -> List[Path]:
    records = _records(args.input, args.schema)
    frame = records.feature_frame()
    basis = _basis(args.basis) or default_basis(frame, max_count_threshold=args.max_count_threshold)
    stumps = expand(frame, basis)
    stumps.to_csv(args.output)
    basis_path = Path(args.output).with_suffix(".basis")
    basis_path.write_text(serialize_basis(basis))
    console.print(
        f"[green]✓[/green] {len(stumps.columns)} stump columns for {len(records)} records"
    )
    return [Path(args.output), basis_path]


def cmd_train(args: argparse.Namespace) -> List[Path]:
    config = _config(args)
    records = _records(args.input, args.schema, args.convicted_only)
    data = records.labeled(args.label)
    basis = _basis(args.basis)
    model = make_trainer(args.model, config, basis).fit(data)
    written = write_model(model, args.output)
    console.print(f"[green]✓[/green] trained {args.model} on {args.label} ({len(data)} records)")
    if args.model == "riskslim":
        console.print(Path(written[1]).read_text())
        console.print(f"gap {model.gap:.2%} ({model.status}, {model.nodes} nodes)")
    return written


def cmd_cv(args: argparse.Namespace) -> List[Path]:
    config = _config(args)
    records = _records(args.input, args.schema, args.convicted_only)
    kinds = _split(args.model, MODEL_KINDS, "model kind")
    labels = _split(args.label, LABEL_NAMES, "label")
    results = []
    scored = []
    for label in labels:
        data = records.labeled(label)
        for kind in kinds:
            result = nested_cv(
                data,
                make_trainer(kind, config),
                seed=config.seed,
                folds=config.folds,
                inner_folds=config.inner_folds,
                stratify=config.stratify,
            )
            results.append(result)
            for row, fold, score, truth in result.holdout_scores:
                scored.append(
                    {
                        "person_id": records[row].person_id,
                        **records[row].sensitive,
                        "label_name": label,
                        "model": kind,
                        "fold": fold,
                        "score": score,
                        "label": truth,
                    }
                )
    summary = summary_frame(results)
    summary.to_csv(args.output, index=False, float_format="%.6f")
    report = Path(args.output).with_suffix(".json")
    write_json([json.loads(r.to_json()) for r in results], report)
    scores = Path(args.output).with_suffix(".scores.csv")
    pd.DataFrame(scored).to_csv(scores, index=False)
    _print_summary(summary, results)
    return [Path(args.output), report, scores]


def _print_summary(summary: pd.DataFrame, results) -> None:
    table = Table(title="Nested cross-validation AUC")
    for column in summary.columns:
        table.add_column(column)
    for record in summary.itertuples(index=False):
        table.add_row(*[f"{v:.4f}" if isinstance(v, float) else str(v) for v in record])
    console.print(table)
    for result in results:
        for skipped in result.skipped:
            console.print(
                f"[yellow]⚠[/yellow] {result.model}/{result.label} fold {skipped.fold} "
                f"skipped: {escape(skipped.reason)}"
            )


def _score_kind(scores: np.ndarray, requested: str) -> str:
    if requested != "auto":
        return requested
    integral = np.all(np.equal(np.mod(scores, 1), 0))
    return "raw" if integral and scores.max(initial=0) > 1 else "probability"


def _select_scores(frame: pd.DataFrame, args: argparse.Namespace) -> pd.DataFrame:
    """Narrow a pooled cv scores file to one model and one label."""
    filters = (("model", args.model, "--model"), ("label_name", args.label, "--label"))
    for column, wanted, flag in filters:
        if column not in frame.columns:
            if wanted:
                raise SchemaError(f"{args.input} has no column '{column}'", feature=column)
            continue
        if wanted:
            frame = frame[frame[column] == wanted]
            if frame.empty:
                raise ConfigError(f"{args.input} has no rows with {column} '{wanted}'")
        elif frame[column].nunique() > 1:
            values = ", ".join(sorted(frame[column].astype(str).unique()))
            raise ConfigError(
                f"{args.input} mixes {column} values ({values}); pick one with {flag}"
            )
    return frame


def cmd_audit(args: argparse.Namespace) -> List[Path]:
    frame = pd.read_csv(args.input)
    for column in (args.score_column, args.label_column, args.attribute):
        if column not in frame.columns:
            raise SchemaError(f"{args.input} has no column '{column}'", feature=column)
    frame = _select_scores(frame, args)
    if frame.empty:
        raise SchemaError(f"{args.input} has no rows")
    scores = frame[args.score_column].to_numpy(dtype=float)
    grouped = GroupedScores.from_arrays(
        scores,
        frame[args.label_column].astype(int),
        frame[args.attribute].astype(str),
        kind=_score_kind(scores, args.kind),
    )
    thresholds = FairnessThresholds.parse(args.thresholds)
    excluded = [g.strip() for g in (args.exclude_groups or "").split(",") if g.strip()]
    report = audit(grouped, args.attribute, thresholds, exclude_groups=excluded)
    write_json(report.to_json(), args.output)
    curves = Path(args.output).with_suffix(".curves.csv")
    report.curve_frame().to_csv(curves, index=False)
    _print_verdicts(report)
    return [Path(args.output), curves]


def _print_verdicts(report: FairnessReport) -> None:
    table = Table(title=f"Fairness audit: {report.attribute} ({report.kind} scores)")
    table.add_column("criterion")
    table.add_column("value")
    table.add_column("threshold")
    table.add_column("verdict")

    def mark(verdict) -> str:
        if verdict is None:
            return "[yellow]undefined[/yellow]"
        return "[green]satisfied[/green]" if verdict else "[red]violated[/red]"

    gap = report.calibration.max_gap
    table.add_row(
        "group calibration",
        "-" if gap is None else f"{gap:.3f}",
        f"{report.thresholds.calibration_gap:g}",
        mark(report.calibration.group_calibrated),
    )
    table.add_row(
        "monotonic calibration",
        f"{report.calibration.worst_decrease:.3f}",
        f"{report.thresholds.monotonic_tolerance:g}",
        mark(report.calibration.monotonic),
    )
    balance = report.balance
    table.add_row(
        "BPC",
        f"{balance.max_positive_gap:.3f}",
        f"{balance.threshold:g}",
        mark(balance.bpc_satisfied),
    )
    table.add_row(
        "BNC",
        f"{balance.max_negative_gap:.3f}",
        f"{balance.threshold:g}",
        mark(balance.bnc_satisfied),
    )
    per_group = report.bg_auc
    table.add_row(
        "BG-AUC", f"{per_group.range:.3f}", f"{per_group.threshold:g}", mark(per_group.satisfied)
    )
    console.print(table)
    if report.excluded_groups:
        console.print(f"excluded groups: {', '.join(report.excluded_groups)}")
    for flag in report.flags:
        console.print(f"[yellow]⚠[/yellow] {escape(flag)}")


def cmd_xregion(args: argparse.Namespace) -> List[Path]:
    config = _config(args)
    source = _records(args.input, args.schema, args.convicted_only)
    target = _records(args.target, args.target_schema, args.convicted_only)
    result = cross_region(
        source,
        target,
        make_trainer(args.model, config),
        args.label,
        seed=config.seed,
        folds=config.folds,
        inner_folds=config.inner_folds,
        stratify=config.stratify,
    )
    write_json(result.to_json(), args.output)
    console.print(
        f"{result.source} → {result.target} ({args.model}, {args.label}): "
        f"target AUC {result.mean_target:.4f}, source holdout AUC {result.mean_source:.4f}, "
        f"drop {result.drop:+.4f} over {len(result.features)} shared features"
    )
    return [Path(args.output)]


def cmd_psa(args: argparse.Namespace) -> List[Path]:
    records = _records(args.input, args.schema, args.convicted_only)
    check_psa_fields(records.field_names)
    rows = []
    for record in records:
        nca_raw, nca_scaled = score_psa_nca(record)
        nvca_raw, nvca_flag = score_psa_nvca(record)
        row = {"person_id": record.person_id, **record.sensitive}
        row.update(
            nca_raw=nca_raw, nca_scaled=nca_scaled, nvca_raw=nvca_raw, nvca_flag=int(nvca_flag)
        )
        if record.labels is not None:
            row.update(record.labels.as_dict())
        rows.append(row)
    pd.DataFrame(rows).to_csv(args.output, index=False)
    console.print(f"[green]✓[/green] PSA scores for {len(rows)} records")
    return [Path(args.output)]


def cmd_synth(args: argparse.Namespace) -> List[Path]:
    config = SynthConfig.from_file(args.config) if args.config else SynthConfig.preset(args.region)
    records = synthesize(config, n=args.n, seed=args.seed)
    write_csv(records, args.output)
    rate = records.label_vector("general_two_year").mean()
    console.print(
        f"[green]✓[/green] {len(records)} {config.region} records (general_two_year {rate:.1%})"
    )
    return [Path(args.output)]


COMMANDS = {
    "featurize": cmd_featurize,
    "train": cmd_train,
    "cv": cmd_cv,
    "audit": cmd_audit,
    "xregion": cmd_xregion,
    "psa": cmd_psa,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recid", description="Interpretable recidivism prediction toolkit"
    )
    parser.add_argument("--log-level", default=None, help="Overrides RECID_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, schema: bool = True, labels: bool = False) -> None:
        p.add_argument("--input", required=True)
        p.add_argument("--output", required=True)
        p.add_argument("--seed", type=int, default=None)
        if schema:
            p.add_argument("--schema", default="kentucky", help="broward, kentucky or a schema CSV")
        if labels:
            p.add_argument("--convicted-only", action="store_true")
            p.add_argument("--config", default=None)

    p = sub.add_parser("featurize", help="Expand records into binary stumps")
    common(p)
    p.add_argument("--basis", default=None, help="Basis file; derived from the data when omitted")
    p.add_argument("--max-count-threshold", type=int, default=10)

    p = sub.add_parser("train", help="Fit one model")
    common(p, labels=True)
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--label", default="general_two_year", choices=LABEL_NAMES)
    p.add_argument("--basis", default=None)

    p = sub.add_parser("cv", help="Nested cross-validation")
    common(p, labels=True)
    p.add_argument("--model", required=True, help="Comma-separated kinds or 'all'")
    p.add_argument("--label", default="general_two_year", help="Comma-separated labels or 'all'")
    p.add_argument("--stratify", action="store_true")

    p = sub.add_parser("audit", help="Fairness audits of a scored CSV")
    common(p, schema=False)
    p.add_argument("--attribute", required=True)
    p.add_argument("--thresholds", default=None, help="key=value,... or a key=value file")
    p.add_argument("--exclude-groups", default=None, help="Comma-separated groups")
    p.add_argument("--score-column", default="score")
    p.add_argument("--label-column", default="label")
    p.add_argument("--kind", default="auto", choices=("auto", "probability", "raw"))
    p.add_argument("--model", default=None, help="Keep one model's rows of a cv scores file")
    p.add_argument("--label", default=None, help="Keep one label's rows of a cv scores file")

    p = sub.add_parser("xregion", help="Cross-region generalization")
    common(p, labels=True)
    p.add_argument("--target", required=True)
    p.add_argument("--target-schema", default="broward")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--label", default="general_two_year", choices=LABEL_NAMES)
    p.add_argument("--stratify", action="store_true")

    p = sub.add_parser("psa", help="PSA NCA / NVCA scores")
    common(p)
    p.add_argument("--convicted-only", action="store_true")

    p = sub.add_parser("synth", help="Generate a synthetic population")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--region", default="kentucky", choices=("kentucky", "broward"))
    p.add_argument("--config", default=None, help="Synth config file (overrides --region)")
    p.add_argument("--n", type=int, default=1000)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Exit code: 0 success, 1 internal failure, 2 user or configuration error
    """
    load_dotenv()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USER
    setup_logging(args.log_level)

    try:
        if args.seed is None:
            args.seed = _default_seed()
        outputs = COMMANDS[args.command](args)
        inputs = [getattr(args, name, None) for name in ("input", "target", "basis")]
        _manifest(args, argv, inputs, outputs)
    except (RecidivismError, ValidationError) as e:
        logger.error("%s", e)
        return EXIT_USER
    except Exception:
        logger.exception("internal failure")
        return EXIT_INTERNAL
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
