"""Command-line surface for the evaluation pipeline.

Subcommands: normalize, split, sample, project-truth, evaluate,
stratify, perturb, audit-leakage, train-baseline, predict-baseline.
Every run writes a ``<out>.manifest.json`` capturing configuration,
seeds, input digests, argv, and the tool version; all other artifacts
are byte-identical across reruns with the same inputs and flags. Errors
exit nonzero with a machine-readable JSON object on stderr. Worker
count for per-record fan-out comes from the PEPSPEC_THREADS environment
variable (default 1).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys

import numpy as np

from ._version import __version__
from .analysis import (
    STRAT_AXES,
    blind_nce_shift,
    charge_perturbation_values,
    delta_decay,
    nce_calibration_sweep,
    stratify,
    summarize_charge_perturbation,
)
from .baseline import load_model, save_model, train
from .config import RunConfig
from .errors import EmptyInputError, MissingKeyColumnError, PepspecError, SchemaError
from .metrics import aggregate_median, bootstrap_ci, evaluate_pair
from .peptide import ptm_metadata, scope_filter, to_canonical_string, to_naked
from .projection import RawSpectrum, make_canonical_vector, project_ground_truth
from .splits import (
    PTM_BUCKETS,
    assign_split,
    audit_from_distances,
    balanced_sample,
    min_edit_distances,
    select_top_n,
    verify_disjoint,
)
from .tables import (
    PredictionLookup,
    SpectralTableReader,
    TablePredictor,
    parallel_map,
    write_manifest,
    write_metric_rows,
    write_prediction_table,
    write_report,
    write_spectral_table,
)

logger = logging.getLogger(__name__)

_PASSTHROUGH = ("raw_file", "andromeda_score", "mass_error_ppm", "split", "sample_key")


def _emit_error(name: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": name, "message": message}) + "\n")


def _build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = (
        ("sa_convention", "sa_convention"),
        ("seed", "seed"),
        ("resamples", "bootstrap_resamples"),
        ("level", "bootstrap_level"),
        ("default_nce", "default_nce"),
        ("ridge_lambda", "ridge_lambda"),
        ("min_bucket_count", "min_bucket_count"),
    )
    for flag, field in overrides:
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, field, value)
    cfg.validate()
    return cfg


def _table_columns(reader: SpectralTableReader, *extra: str) -> list[str]:
    """Canonical output column order, echoing optional input columns."""
    columns = ["modified_sequence", "precursor_charge", "collision_energy"]
    for name in ("mz_list", "intensity_list"):
        if reader.has_column(name):
            columns.append(name)
    for name in _PASSTHROUGH:
        if reader.has_column(name) and name not in extra:
            columns.append(name)
    columns.extend(extra)
    return columns


def _scope_filtered(reader: SpectralTableReader, counters: dict):
    for _, record in reader:
        counters["n_read"] += 1
        if not scope_filter(record):
            counters["n_out_of_scope"] += 1
            continue
        yield record


def cmd_normalize(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    reader = SpectralTableReader(args.input, default_nce=cfg.default_nce, on_error=args.on_error)
    counters = {"n_read": 0, "n_out_of_scope": 0}
    columns = _table_columns(reader, "naked_sequence", "peptide_length", "has_ptm", "ptm_bucket")

    def rows():
        for record in _scope_filtered(reader, counters):
            has_ptm, bucket = ptm_metadata(record.peptide)
            yield record, {
                "naked_sequence": to_naked(record.peptide),
                "peptide_length": str(record.peptide.length),
                "has_ptm": "true" if has_ptm else "false",
                "ptm_bucket": bucket,
            }

    n_written = write_spectral_table(args.out, rows(), columns)
    if n_written == 0:
        raise EmptyInputError("no rows survive the scope filter")
    stats = {**counters, "n_written": n_written, "n_malformed_skipped": reader.skipped}
    write_manifest(
        args.out,
        command="normalize",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.input],
        outputs=[args.out],
        stats=stats,
    )
    logger.info("normalize: %s", stats)
    return 0


def cmd_split(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    rule = args.rule or cfg.split_rule
    reader = SpectralTableReader(args.input, default_nce=cfg.default_nce, on_error=args.on_error)
    counters = {"n_read": 0, "n_out_of_scope": 0}
    counts = {"train": 0, "val": 0, "test": 0}
    backbones: dict[str, set[str]] = {"train": set(), "val": set(), "test": set()}
    columns = _table_columns(reader, "split")

    def rows():
        for i, record in enumerate(_scope_filtered(reader, counters)):
            assignment = assign_split(record, rule, row_index=i)
            counts[assignment.label] += 1
            backbones[assignment.label].add(to_naked(record.peptide))
            yield record, {"split": assignment.label}

    n_written = write_spectral_table(args.out, rows(), columns)
    if n_written == 0:
        raise EmptyInputError("no rows survive the scope filter")
    disjointness = verify_disjoint(backbones)
    report = {
        "format_version": 1,
        "rule": rule,
        "n_rows": n_written,
        "counts": counts,
        "fractions": {label: counts[label] / n_written for label in counts},
        "disjointness": {
            "violations": disjointness.violations,
            "overlap_counts": {pair: len(shared) for pair, shared in disjointness.overlaps.items()},
            "overlap_examples": {
                pair: list(shared[:10]) for pair, shared in disjointness.overlaps.items()
            },
        },
    }
    report_path = f"{args.out}.report.json"
    write_report(report_path, report)
    outputs = [args.out, report_path]
    if not args.no_plots:
        from .plots import plot_bar

        outputs.append(
            plot_bar(
                list(counts),
                [counts[label] for label in counts],
                f"{args.out}.counts.png",
                ylabel="rows",
                title=f"split sizes ({rule} rule)",
            )
        )
    write_manifest(
        args.out,
        command="split",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.input],
        outputs=outputs,
        stats={**counters, "n_written": n_written, "n_malformed_skipped": reader.skipped},
    )
    return 0


def cmd_sample(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    reader = SpectralTableReader(args.input, default_nce=cfg.default_nce, on_error=args.on_error)
    counters = {"n_read": 0, "n_out_of_scope": 0}
    if args.mode == "balanced":
        selected = balanced_sample(_scope_filtered(reader, counters), args.quota, cfg.seed)
    else:
        selected = select_top_n(_scope_filtered(reader, counters), args.n, cfg.seed)
    if not selected:
        raise EmptyInputError("sampling selected no rows")
    columns = _table_columns(reader)
    write_spectral_table(args.out, ((record, {}) for record in selected), columns)
    bucket_counts = {bucket: 0 for bucket in PTM_BUCKETS}
    for record in selected:
        bucket_counts[ptm_metadata(record.peptide)[1]] += 1
    report = {
        "format_version": 1,
        "mode": args.mode,
        "seed": cfg.seed,
        "requested": args.quota if args.mode == "balanced" else args.n,
        "n_selected": len(selected),
        "ptm_bucket_counts": bucket_counts,
    }
    report_path = f"{args.out}.report.json"
    write_report(report_path, report)
    write_manifest(
        args.out,
        command="sample",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.input],
        outputs=[args.out, report_path],
        stats={**counters, "n_selected": len(selected), "n_malformed_skipped": reader.skipped},
    )
    return 0


def cmd_project_truth(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    space = cfg.space()
    reader = SpectralTableReader(
        args.input, default_nce=cfg.default_nce, need_peaks=True, on_error=args.on_error
    )
    counters = {"n_read": 0, "n_out_of_scope": 0}

    def rows():
        for record in _scope_filtered(reader, counters):
            truth = project_ground_truth(
                RawSpectrum(record.mz, record.intensity),
                record.peptide,
                record.precursor_charge,
                space,
            )
            yield record, truth

    n_written = write_prediction_table(
        args.out, rows(), sparse=args.sparse, include_raw_file=reader.has_column("raw_file")
    )
    if n_written == 0:
        raise EmptyInputError("no rows survive the scope filter")
    write_manifest(
        args.out,
        command="project-truth",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.input],
        outputs=[args.out],
        stats={**counters, "n_written": n_written, "n_malformed_skipped": reader.skipped},
    )
    return 0


def cmd_evaluate(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    space = cfg.space()
    reader = SpectralTableReader(
        args.truth, default_nce=cfg.default_nce, need_peaks=True, on_error=args.on_error
    )
    lookup = PredictionLookup(args.pred, space)
    counters = {"n_read": 0, "n_out_of_scope": 0}
    n_missing = 0
    pairs = []
    for record in _scope_filtered(reader, counters):
        values = lookup.take(
            to_canonical_string(record.peptide),
            record.precursor_charge,
            record.collision_energy,
            record.raw_file,
        )
        if values is None:
            n_missing += 1
            continue
        pairs.append((record, values))
    if not pairs:
        raise EmptyInputError("no truth rows matched any prediction")

    def score(pair):
        record, values = pair
        truth = project_ground_truth(
            RawSpectrum(record.mz, record.intensity),
            record.peptide,
            record.precursor_charge,
            space,
        )
        pred = make_canonical_vector(values, truth.mask)
        return evaluate_pair(
            record,
            pred,
            truth,
            convention=cfg.sa_convention,
            length_edges=cfg.length_edges,
            nce_bin_width=cfg.nce_bin_width,
        )

    rows = parallel_map(score, pairs)
    medians = {name: aggregate_median(rows, name) for name in ("sa", "sas", "pcc")}
    cis = {
        name: dataclasses.asdict(
            bootstrap_ci(
                [getattr(row, name) for row in rows],
                cfg.bootstrap_resamples,
                cfg.bootstrap_level,
                cfg.seed,
            )
        )
        for name in ("sa", "sas", "pcc")
    }
    report = {
        "format_version": 1,
        "sa_convention": cfg.sa_convention,
        "n_truth_rows": counters["n_read"],
        "n_out_of_scope": counters["n_out_of_scope"],
        "n_missing_prediction": n_missing,
        "n_scored": len(rows),
        "n_prediction_rows": len(lookup),
        "n_prediction_unmatched": lookup.unused_count(),
        "n_malformed_skipped": reader.skipped,
        "medians": medians,
        "ci": cis,
    }
    write_report(args.out, report)
    per_spectrum = args.per_spectrum or f"{args.out}.per_spectrum.tsv"
    write_metric_rows(per_spectrum, rows)
    outputs = [args.out, per_spectrum]
    if not args.no_plots:
        from .plots import plot_histogram

        outputs.append(
            plot_histogram(
                [row.sa for row in rows],
                f"{args.out}.sa_hist.png",
                xlabel="spectral angle",
                title=f"SA distribution (n={len(rows)})",
            )
        )
    write_manifest(
        args.out,
        command="evaluate",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.truth, args.pred],
        outputs=outputs,
        stats={"n_scored": len(rows)},
    )
    return 0


def cmd_stratify(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    from .tables import read_metric_rows

    rows = read_metric_rows(args.metrics)
    table = stratify(
        rows,
        args.axis,
        with_ci=args.ci,
        resamples=cfg.bootstrap_resamples,
        level=cfg.bootstrap_level,
        seed=cfg.seed,
    )
    payload = {
        "format_version": 1,
        "axis": table.axis,
        "n_rows": len(rows),
        "rows": [dataclasses.asdict(row) for row in table.rows],
    }
    if args.delta_baseline is not None:
        payload["delta_decay"] = {
            "baseline": args.delta_baseline,
            "rows": [dataclasses.asdict(row) for row in delta_decay(table, args.delta_baseline)],
        }
    write_report(args.out, payload)
    csv_path = f"{args.out}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["key", "n", "median_sa", "median_sas", "median_pcc", "ci_sa_lo", "ci_sa_hi"])
        for row in table.rows:
            writer.writerow(
                [
                    row.key,
                    row.n,
                    repr(row.median_sa),
                    repr(row.median_sas),
                    repr(row.median_pcc),
                    "" if row.ci_sa is None else repr(row.ci_sa.lo),
                    "" if row.ci_sa is None else repr(row.ci_sa.hi),
                ]
            )
    outputs = [args.out, csv_path]
    if not args.no_plots:
        from .plots import plot_bar

        outputs.append(
            plot_bar(
                [row.key for row in table.rows],
                [row.median_sa for row in table.rows],
                f"{args.out}.median_sa.png",
                ylabel="median SA",
                title=f"median SA by {table.axis}",
            )
        )
    write_manifest(
        args.out,
        command="stratify",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.metrics],
        outputs=outputs,
        stats={"n_rows": len(rows), "n_strata": len(table.rows)},
    )
    return 0


def _load_predictor(args: argparse.Namespace, space) -> tuple[object, list[str]]:
    if getattr(args, "model", None):
        model = load_model(args.model)
        return model, [args.model]
    if getattr(args, "pred", None):
        return TablePredictor(PredictionLookup(args.pred, space)), [args.pred]
    raise SchemaError("provide a predictor with --model or --pred")


def cmd_perturb(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    space = cfg.space()
    predictor, predictor_inputs = _load_predictor(args, space)
    need_peaks = args.mode in ("nce-sweep", "nce-shift")
    reader = SpectralTableReader(
        args.truth, default_nce=cfg.default_nce, need_peaks=need_peaks, on_error=args.on_error
    )
    counters = {"n_read": 0, "n_out_of_scope": 0}
    records = list(_scope_filtered(reader, counters))
    if not records:
        raise EmptyInputError("no in-scope records in the evaluation table")
    outputs = [args.out]
    if args.mode == "nce-sweep":
        if not args.grid:
            raise SchemaError("nce-sweep needs --grid")
        try:
            grid = [float(x) for x in args.grid.split(",") if x.strip()]
        except ValueError as exc:
            raise SchemaError(f"malformed --grid {args.grid!r}") from exc
        eval_rows = _truth_pairs(records, space)
        result = nce_calibration_sweep(predictor, eval_rows, grid, cfg.sa_convention)
        payload = {
            "format_version": 1,
            "mode": args.mode,
            "grid": grid,
            "curve": [dataclasses.asdict(point) for point in result.curve],
            "argmin_nce": result.argmin_nce,
        }
        if not args.no_plots:
            from .plots import plot_curve

            outputs.append(
                plot_curve(
                    [point.nce for point in result.curve],
                    [point.median_sa for point in result.curve],
                    f"{args.out}.sweep.png",
                    xlabel="inference NCE",
                    ylabel="median SA",
                    title="NCE calibration sweep",
                    vline=result.argmin_nce,
                )
            )
    elif args.mode == "nce-shift":
        eval_rows = _truth_pairs(records, space)
        delta = blind_nce_shift(
            predictor, eval_rows, args.nce_from, args.nce_to, cfg.sa_convention
        )
        payload = {
            "format_version": 1,
            "mode": args.mode,
            "nce_from": args.nce_from,
            "nce_to": args.nce_to,
            "delta_sa": delta,
        }
    else:
        sas_values = charge_perturbation_values(predictor, records, cfg.sa_convention)
        summary = summarize_charge_perturbation(sas_values, args.threshold)
        payload = {"format_version": 1, "mode": args.mode, **dataclasses.asdict(summary)}
        if not args.no_plots:
            from .plots import plot_histogram

            outputs.append(
                plot_histogram(
                    sas_values,
                    f"{args.out}.sas_hist.png",
                    xlabel="SAS between z=2 and z=3 predictions",
                    title="charge perturbation",
                    vline=args.threshold,
                )
            )
    write_report(args.out, payload)
    write_manifest(
        args.out,
        command="perturb",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.truth, *predictor_inputs],
        outputs=outputs,
        stats={**counters, "n_malformed_skipped": reader.skipped},
    )
    return 0


def _truth_pairs(records, space):
    def project(record):
        return (
            record,
            project_ground_truth(
                RawSpectrum(record.mz, record.intensity),
                record.peptide,
                record.precursor_charge,
                space,
            ),
        )

    return parallel_map(project, records)


def cmd_audit_leakage(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    reader = SpectralTableReader(args.input, default_nce=cfg.default_nce, on_error=args.on_error)
    if not reader.has_column("split"):
        raise MissingKeyColumnError(f"{args.input} has no split column; run split first")
    backbones: dict[str, set[str]] = {}
    counters = {"n_read": 0, "n_out_of_scope": 0}
    for record in _scope_filtered(reader, counters):
        if record.split:
            backbones.setdefault(record.split, set()).add(to_naked(record.peptide))
    test_set = backbones.get(args.test_label, set())
    train_set = backbones.get(args.train_label, set())
    if not test_set or not train_set:
        raise EmptyInputError(
            f"need non-empty {args.test_label!r} and {args.train_label!r} splits"
        )
    distances = min_edit_distances(test_set, train_set)
    audit = audit_from_distances(distances, len(test_set), len(train_set))
    payload = {"format_version": 1, **dataclasses.asdict(audit)}
    write_report(args.out, payload)
    outputs = [args.out]
    if not args.no_plots:
        from .plots import plot_histogram

        outputs.append(
            plot_histogram(
                distances,
                f"{args.out}.distances.png",
                xlabel="min edit distance to train",
                title="leakage audit",
                bins=max(5, max(distances) + 1),
            )
        )
    write_manifest(
        args.out,
        command="audit-leakage",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.input],
        outputs=outputs,
        stats={**counters, "n_malformed_skipped": reader.skipped},
    )
    return 0


def cmd_train_baseline(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    space = cfg.space()
    reader = SpectralTableReader(
        args.input, default_nce=cfg.default_nce, need_peaks=True, on_error=args.on_error
    )
    counters = {"n_read": 0, "n_out_of_scope": 0}
    pairs = _truth_pairs(list(_scope_filtered(reader, counters)), space)
    model = train(
        pairs,
        ridge_lambda=cfg.ridge_lambda,
        min_bucket_count=cfg.min_bucket_count,
        space=space,
    )
    save_model(model, args.out)
    write_manifest(
        args.out,
        command="train-baseline",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.input],
        outputs=[args.out],
        stats={
            **counters,
            "n_training_rows": len(pairs),
            "n_buckets": len(model.buckets),
            "n_malformed_skipped": reader.skipped,
        },
    )
    return 0


def cmd_predict_baseline(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = _build_config(args)
    model = load_model(args.model)
    reader = SpectralTableReader(args.input, default_nce=cfg.default_nce, on_error=args.on_error)
    counters = {"n_read": 0, "n_out_of_scope": 0}

    def rows():
        for record in _scope_filtered(reader, counters):
            yield record, model.predict(
                record.peptide, record.precursor_charge, record.collision_energy
            )

    n_written = write_prediction_table(
        args.out, rows(), sparse=args.sparse, include_raw_file=reader.has_column("raw_file")
    )
    if n_written == 0:
        raise EmptyInputError("no rows survive the scope filter")
    write_manifest(
        args.out,
        command="predict-baseline",
        argv=argv,
        config=cfg.to_dict(),
        inputs=[args.model, args.input],
        outputs=[args.out],
        stats={**counters, "n_written": n_written, "n_malformed_skipped": reader.skipped},
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pepspec",
        description="Masked spectral-similarity evaluation for peptide MS/MS prediction",
    )
    parser.add_argument("--version", action="version", version=f"pepspec {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file of run settings")
    common.add_argument("--out", required=True, help="primary output path")
    common.add_argument(
        "--on-error",
        choices=("fail", "skip"),
        default="fail",
        help="what to do with malformed input rows",
    )
    common.add_argument("--seed", type=int, default=None, help="override the run seed")
    common.add_argument(
        "--default-nce",
        dest="default_nce",
        type=float,
        default=None,
        help="collision energy injected when the input has no such column",
    )
    plots = argparse.ArgumentParser(add_help=False)
    plots.add_argument("--no-plots", action="store_true", help="skip PNG figure rendering")
    metricsflags = argparse.ArgumentParser(add_help=False)
    metricsflags.add_argument(
        "--sa-convention",
        dest="sa_convention",
        choices=("1/pi", "2/pi"),
        default=None,
        help="spectral angle normalization",
    )
    metricsflags.add_argument(
        "--resamples", type=int, default=None, help="bootstrap resample count"
    )
    metricsflags.add_argument(
        "--level", type=float, default=None, help="bootstrap confidence level"
    )

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", parents=[common], help="canonicalize PTM tokens, apply the scope filter, add metadata columns")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("split", parents=[common, plots], help="assign train/val/test labels and verify backbone disjointness")
    p.add_argument("--input", required=True)
    p.add_argument("--rule", choices=("backbone", "modified_sequence", "row_random"), default=None)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("sample", parents=[common], help="PTM-balanced or top-N deterministic sampling")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=("balanced", "top-n"), required=True)
    p.add_argument("--quota", type=int, default=1000, help="balanced-mode total quota")
    p.add_argument("--n", type=int, default=1000, help="top-n-mode selection size")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("project-truth", parents=[common], help="project observed spectra into the canonical ion space")
    p.add_argument("--input", required=True)
    p.add_argument("--sparse", action="store_true", help="write sparse index:value vectors")
    p.set_defaults(func=cmd_project_truth)

    p = sub.add_parser("evaluate", parents=[common, plots, metricsflags], help="score a prediction table against projected ground truth")
    p.add_argument("--truth", required=True, help="spectral table with peak lists")
    p.add_argument("--pred", required=True, help="prediction table")
    p.add_argument("--per-spectrum", dest="per_spectrum", default=None, help="per-spectrum metrics TSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stratify", parents=[common, plots, metricsflags], help="aggregate per-spectrum metrics along one axis")
    p.add_argument("--metrics", required=True, help="per-spectrum metrics TSV from evaluate")
    p.add_argument("--axis", choices=STRAT_AXES, required=True)
    p.add_argument("--ci", action="store_true", help="attach bootstrap CIs to each stratum")
    p.add_argument("--delta-baseline", dest="delta_baseline", default=None, help="stratum key to difference the table against")
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("perturb", parents=[common, plots, metricsflags], help="NCE sweep/shift and charge perturbation probes")
    p.add_argument("--mode", choices=("nce-sweep", "nce-shift", "charge"), required=True)
    p.add_argument("--truth", required=True, help="spectral table of evaluation records")
    p.add_argument("--model", default=None, help="baseline model artifact")
    p.add_argument("--pred", default=None, help="prediction table usable as a predictor")
    p.add_argument("--grid", default=None, help="comma-separated NCE grid for nce-sweep")
    p.add_argument("--nce-from", dest="nce_from", type=float, default=25.0)
    p.add_argument("--nce-to", dest="nce_to", type=float, default=30.0)
    p.add_argument("--threshold", type=float, default=0.90, help="high-SAS threshold for charge mode")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("audit-leakage", parents=[common, plots], help="nearest-neighbor edit-distance audit between splits")
    p.add_argument("--input", required=True, help="spectral table with a split column")
    p.add_argument("--test-label", dest="test_label", default="test")
    p.add_argument("--train-label", dest="train_label", default="train")
    p.set_defaults(func=cmd_audit_leakage)

    p = sub.add_parser("train-baseline", parents=[common], help="fit the bucketed linear baseline on projected ground truth")
    p.add_argument("--input", required=True)
    p.add_argument("--ridge-lambda", dest="ridge_lambda", type=float, default=None)
    p.add_argument("--min-bucket-count", dest="min_bucket_count", type=int, default=None)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("predict-baseline", parents=[common], help="predict canonical vectors for every in-scope row")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--sparse", action="store_true", help="write sparse index:value vectors")
    p.set_defaults(func=cmd_predict_baseline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args_list = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(args_list)
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args, args_list)
    except PepspecError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1
    except OSError as exc:
        _emit_error("IoError", str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
