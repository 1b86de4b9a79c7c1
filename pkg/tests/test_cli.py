"""End-to-end tests of the command-line interface."""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest

from helpers import random_modified, synthetic_record, truth_vector, write_input_table
from pepspec._version import __version__
from pepspec.cli import main
from pepspec.peptide import to_canonical_string
from pepspec.projection import make_canonical_vector
from pepspec.splits import ptm_quotas
from pepspec.tables import PredictionLookup, SpectralTableReader, write_prediction_table

PNG_MAGIC = b"\x89PNG"


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    rng = np.random.default_rng(5)
    records = []
    for i in range(40):
        peptide = random_modified(rng, int(rng.integers(7, 13)))
        records.append(
            synthetic_record(
                to_canonical_string(peptide),
                charge=int(rng.choice([2, 2, 3])),
                ce=float(rng.choice([25.0, 30.0])),
                seed=100 + i,
            )
        )
    path = tmp_path_factory.mktemp("corpus") / "corpus.tsv"
    write_input_table(str(path), records)
    return str(path), records


def _last_json_line(err: str) -> dict:
    lines = [line for line in err.strip().splitlines() if line.strip().startswith("{")]
    return json.loads(lines[-1])


def _manifest(path: str) -> dict:
    with open(f"{path}.manifest.json", encoding="utf-8") as handle:
        return json.load(handle)


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert f"pepspec {__version__}" in capsys.readouterr().out


def test_argparse_failures_exit_2(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        main(["stratify", "--metrics", "x", "--out", "y", "--axis", "bogus"])
    assert excinfo.value.code == 2


def test_normalize_adds_metadata_and_drops_out_of_scope(corpus, tmp_path):
    corpus_path, records = corpus
    extra = tmp_path / "with_bad.tsv"
    bad = [synthetic_record("ACDEF", charge=2), synthetic_record("ACDEFGHIK", charge=7)]
    write_input_table(str(extra), records + bad)
    out = tmp_path / "normalized.tsv"
    assert main(["normalize", "--input", str(extra), "--out", str(out)]) == 0
    reader = SpectralTableReader(str(out))
    assert reader.has_column("naked_sequence")
    assert reader.has_column("ptm_bucket")
    rows = list(reader)
    assert len(rows) == len(records)
    manifest = _manifest(str(out))
    assert manifest["stats"]["n_read"] == len(records) + 2
    assert manifest["stats"]["n_out_of_scope"] == 2
    assert manifest["stats"]["n_written"] == len(records)
    assert manifest["command"] == "normalize"
    assert str(extra) in manifest["inputs"]


def test_normalize_injects_default_nce(corpus, tmp_path):
    _, records = corpus
    no_ce = tmp_path / "no_ce.tsv"
    write_input_table(str(no_ce), records[:4], with_ce=False)
    out = tmp_path / "normalized.tsv"
    assert main(["normalize", "--input", str(no_ce), "--out", str(out), "--default-nce", "27.0"]) == 0
    assert all(r.collision_energy == 27.0 for _, r in SpectralTableReader(str(out)))


def test_normalize_missing_input_emits_error_json(tmp_path, capsys):
    rc = main(["normalize", "--input", str(tmp_path / "absent.tsv"), "--out", str(tmp_path / "o.tsv")])
    assert rc == 1
    payload = _last_json_line(capsys.readouterr().err)
    assert payload["error"] == "SchemaError"
    assert "absent.tsv" in payload["message"]


def test_normalize_unwritable_output_is_io_error(corpus, tmp_path, capsys):
    corpus_path, _ = corpus
    rc = main(["normalize", "--input", corpus_path, "--out", str(tmp_path / "no_dir" / "o.tsv")])
    assert rc == 1
    assert _last_json_line(capsys.readouterr().err)["error"] == "IoError"


def test_normalize_all_rows_out_of_scope_is_empty_input(tmp_path, capsys):
    path = tmp_path / "short.tsv"
    write_input_table(str(path), [synthetic_record("ACDEF", charge=2)])
    rc = main(["normalize", "--input", str(path), "--out", str(tmp_path / "o.tsv")])
    assert rc == 1
    assert _last_json_line(capsys.readouterr().err)["error"] == "EmptyInputError"


def test_split_labels_report_and_figure(corpus, tmp_path):
    corpus_path, records = corpus
    out = tmp_path / "split.tsv"
    assert main(["split", "--input", corpus_path, "--out", str(out), "--rule", "backbone"]) == 0
    labels = [record.split for _, record in SpectralTableReader(str(out))]
    assert len(labels) == len(records)
    assert set(labels) <= {"train", "val", "test"}
    report = json.loads((tmp_path / "split.tsv.report.json").read_text())
    assert report["rule"] == "backbone"
    assert sum(report["counts"].values()) == len(records)
    assert abs(sum(report["fractions"].values()) - 1.0) < 1e-9
    assert report["disjointness"]["violations"] == 0
    png = tmp_path / "split.tsv.counts.png"
    assert png.read_bytes()[:4] == PNG_MAGIC
    no_plots = tmp_path / "split2.tsv"
    assert main(["split", "--input", corpus_path, "--out", str(no_plots), "--no-plots"]) == 0
    assert not (tmp_path / "split2.tsv.counts.png").exists()


def test_sample_balanced_respects_quotas(corpus, tmp_path):
    corpus_path, records = corpus
    out = tmp_path / "sampled.tsv"
    assert main(
        ["sample", "--input", corpus_path, "--out", str(out), "--mode", "balanced", "--quota", "8"]
    ) == 0
    report = json.loads((tmp_path / "sampled.tsv.report.json").read_text())
    counts = report["ptm_bucket_counts"]
    quotas = ptm_quotas(8)
    assert sum(counts.values()) == report["n_selected"] <= 8
    assert all(counts[bucket] <= quotas[bucket] for bucket in quotas)
    assert len(list(SpectralTableReader(str(out)))) == report["n_selected"]


def test_sample_top_n_is_order_invariant(corpus, tmp_path):
    corpus_path, records = corpus
    shuffled_path = tmp_path / "shuffled.tsv"
    rng = np.random.default_rng(3)
    write_input_table(str(shuffled_path), [records[i] for i in rng.permutation(len(records))])
    out_a = tmp_path / "top_a.tsv"
    out_b = tmp_path / "top_b.tsv"
    assert main(["sample", "--input", corpus_path, "--out", str(out_a), "--mode", "top-n", "--n", "5"]) == 0
    assert main(["sample", "--input", str(shuffled_path), "--out", str(out_b), "--mode", "top-n", "--n", "5"]) == 0
    keys_a = {(to_canonical_string(r.peptide), r.precursor_charge) for _, r in SpectralTableReader(str(out_a))}
    keys_b = {(to_canonical_string(r.peptide), r.precursor_charge) for _, r in SpectralTableReader(str(out_b))}
    assert len(keys_a) == 5
    assert keys_a == keys_b


def test_project_truth_round_trips_vectors(corpus, tmp_path):
    corpus_path, records = corpus
    dense_out = tmp_path / "truth_dense.tsv"
    sparse_out = tmp_path / "truth_sparse.tsv"
    assert main(["project-truth", "--input", corpus_path, "--out", str(dense_out)]) == 0
    assert main(["project-truth", "--input", corpus_path, "--out", str(sparse_out), "--sparse"]) == 0
    dense = PredictionLookup(str(dense_out))
    sparse = PredictionLookup(str(sparse_out))
    assert len(dense) == len(sparse) > 0
    record = records[0]
    expected = truth_vector(record).values
    for lookup in (dense, sparse):
        values = lookup.take(
            to_canonical_string(record.peptide),
            record.precursor_charge,
            record.collision_energy,
            record.raw_file,
        )
        assert values is not None
        assert np.array_equal(values, expected)
    assert sparse_out.stat().st_size < dense_out.stat().st_size


def _evaluate(corpus_path, pred_path, out, *flags):
    return main(
        ["evaluate", "--truth", corpus_path, "--pred", str(pred_path), "--out", str(out), *flags]
    )


@pytest.fixture(scope="module")
def truth_table(corpus, tmp_path_factory):
    corpus_path, _ = corpus
    out = tmp_path_factory.mktemp("truth") / "truth.tsv"
    assert main(["project-truth", "--input", corpus_path, "--out", str(out), "--sparse"]) == 0
    return str(out)


def test_evaluate_self_prediction_is_perfect(corpus, truth_table, tmp_path):
    corpus_path, records = corpus
    out = tmp_path / "report.json"
    assert _evaluate(corpus_path, truth_table, out) == 0
    report = json.loads(out.read_text())
    assert report["n_scored"] == len(records)
    assert report["n_missing_prediction"] == 0
    assert report["medians"]["sa"] == 0.0
    assert report["medians"]["sas"] == 1.0
    assert report["medians"]["pcc"] == 1.0
    assert report["ci"]["sa"]["lo"] == 0.0 and report["ci"]["sa"]["hi"] == 0.0
    per_spectrum = tmp_path / "report.json.per_spectrum.tsv"
    assert len(per_spectrum.read_text().splitlines()) == len(records) + 1
    hist = tmp_path / "report.json.sa_hist.png"
    assert hist.read_bytes()[:4] == PNG_MAGIC
    manifest = _manifest(str(out))
    assert manifest["stats"]["n_scored"] == len(records)
    assert str(hist) in manifest["outputs"]


def test_evaluate_counts_missing_predictions(corpus, truth_table, tmp_path):
    corpus_path, records = corpus
    trimmed = tmp_path / "trimmed.tsv"
    lines = open(truth_table, encoding="utf-8").read().splitlines()
    trimmed.write_text("\n".join(lines[:-1]) + "\n")
    out = tmp_path / "report.json"
    assert _evaluate(corpus_path, trimmed, out, "--no-plots") == 0
    report = json.loads(out.read_text())
    assert report["n_missing_prediction"] == 1
    assert report["n_scored"] == len(records) - 1
    assert report["n_prediction_unmatched"] == 0


def test_evaluate_is_byte_deterministic(corpus, truth_table, tmp_path):
    corpus_path, _ = corpus
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    custom = tmp_path / "rows.tsv"
    assert _evaluate(corpus_path, truth_table, out_a, "--no-plots") == 0
    assert _evaluate(corpus_path, truth_table, out_b, "--no-plots", "--per-spectrum", str(custom)) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    assert (tmp_path / "a.json.per_spectrum.tsv").read_bytes() == custom.read_bytes()


def test_evaluate_no_matches_is_empty_input(corpus, tmp_path, capsys):
    corpus_path, _ = corpus
    pred = tmp_path / "other.tsv"
    other = synthetic_record("WWWWQQQQK", charge=2, ce=99.0)
    write_prediction_table(str(pred), [(other, truth_vector(other))], sparse=True)
    rc = _evaluate(corpus_path, pred, tmp_path / "r.json", "--no-plots")
    assert rc == 1
    assert _last_json_line(capsys.readouterr().err)["error"] == "EmptyInputError"


def test_evaluate_respects_convention_flag_over_config(corpus, truth_table, tmp_path):
    corpus_path, _ = corpus
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"sa_convention": "2/pi", "seed": 9}))
    out = tmp_path / "r.json"
    assert _evaluate(
        corpus_path, truth_table, out, "--no-plots", "--config", str(config), "--sa-convention", "1/pi"
    ) == 0
    report = json.loads(out.read_text())
    assert report["sa_convention"] == "1/pi"
    manifest = _manifest(str(out))
    assert manifest["config"]["sa_convention"] == "1/pi"
    assert manifest["config"]["seed"] == 9


@pytest.fixture(scope="module")
def per_spectrum_table(corpus, truth_table, tmp_path_factory):
    corpus_path, _ = corpus
    out = tmp_path_factory.mktemp("eval") / "report.json"
    rows = str(out) + ".rows.tsv"
    assert _evaluate(corpus_path, truth_table, out, "--no-plots", "--per-spectrum", rows) == 0
    return rows


def test_stratify_cli_axes_and_delta(per_spectrum_table, tmp_path):
    out = tmp_path / "strata.json"
    assert main(
        [
            "stratify", "--metrics", per_spectrum_table, "--out", str(out),
            "--axis", "charge", "--ci", "--resamples", "200",
        ]
    ) == 0
    payload = json.loads(out.read_text())
    assert payload["axis"] == "charge"
    assert [row["key"] for row in payload["rows"]] == sorted(
        (row["key"] for row in payload["rows"]), key=int
    )
    assert all(row["ci_sa"] is not None for row in payload["rows"])
    csv_text = (tmp_path / "strata.json.csv").read_text().splitlines()
    assert csv_text[0].startswith("key,n,median_sa")
    assert len(csv_text) == len(payload["rows"]) + 1
    assert (tmp_path / "strata.json.median_sa.png").read_bytes()[:4] == PNG_MAGIC
    length_out = tmp_path / "length.json"
    assert main(
        [
            "stratify", "--metrics", per_spectrum_table, "--out", str(length_out),
            "--axis", "length_bin", "--delta-baseline", "[6,10)", "--no-plots",
        ]
    ) == 0
    decay = json.loads(length_out.read_text())["delta_decay"]
    assert decay["baseline"] == "[6,10)"
    assert decay["rows"][0]["delta_sa"] == 0.0


def test_stratify_missing_baseline_bin_fails(per_spectrum_table, tmp_path, capsys):
    rc = main(
        [
            "stratify", "--metrics", per_spectrum_table, "--out", str(tmp_path / "s.json"),
            "--axis", "charge", "--delta-baseline", "[99,100)", "--no-plots",
        ]
    )
    assert rc == 1
    assert _last_json_line(capsys.readouterr().err)["error"] == "MissingBaselineBinError"


@pytest.fixture(scope="module")
def model_path(corpus, tmp_path_factory):
    corpus_path, _ = corpus
    out = tmp_path_factory.mktemp("model") / "model.json"
    assert main(["train-baseline", "--input", corpus_path, "--out", str(out)]) == 0
    return str(out)


def test_train_predict_evaluate_pipeline(corpus, model_path, tmp_path):
    corpus_path, records = corpus
    manifest = _manifest(model_path)
    assert manifest["stats"]["n_training_rows"] == len(records)
    assert manifest["stats"]["n_buckets"] >= 1
    pred = tmp_path / "pred.tsv"
    assert main(
        ["predict-baseline", "--model", model_path, "--input", corpus_path, "--out", str(pred), "--sparse"]
    ) == 0
    assert len(PredictionLookup(str(pred))) > 0
    out = tmp_path / "report.json"
    assert _evaluate(corpus_path, pred, out, "--no-plots") == 0
    report = json.loads(out.read_text())
    assert report["n_scored"] == len(records)
    assert 0.0 <= report["medians"]["sa"] <= 0.5


def test_perturb_charge_mode(corpus, model_path, tmp_path):
    corpus_path, records = corpus
    out = tmp_path / "charge.json"
    assert main(
        ["perturb", "--mode", "charge", "--truth", corpus_path, "--model", model_path, "--out", str(out)]
    ) == 0
    payload = json.loads(out.read_text())
    assert payload["mode"] == "charge"
    assert payload["n"] == sum(1 for r in records if r.precursor_charge == 2)
    assert 0.0 <= payload["median_sas"] <= 1.0
    assert 0.0 <= payload["high_sas_fraction"] <= 1.0
    assert payload["threshold"] == 0.90
    assert (tmp_path / "charge.json.sas_hist.png").read_bytes()[:4] == PNG_MAGIC


def test_perturb_nce_shift_is_zero_for_snapping_model(corpus, model_path, tmp_path):
    corpus_path, _ = corpus
    out = tmp_path / "shift.json"
    assert main(
        [
            "perturb", "--mode", "nce-shift", "--truth", corpus_path, "--model", model_path,
            "--out", str(out), "--nce-from", "25.0", "--nce-to", "30.0", "--no-plots",
        ]
    ) == 0
    payload = json.loads(out.read_text())
    assert payload["nce_from"] == 25.0
    assert payload["nce_to"] == 30.0
    assert isinstance(payload["delta_sa"], float)


def test_perturb_sweep_with_prediction_table(corpus, tmp_path):
    corpus_path, records = corpus
    rows = []
    for record in records:
        truth = truth_vector(record)
        for ce in (20.0, 25.0, 30.0):
            if ce == record.collision_energy:
                vector = truth
            else:
                values = truth.values.copy()
                idx = np.flatnonzero(truth.mask)
                values[idx] = np.roll(values[idx], 3)
                vector = make_canonical_vector(values, truth.mask)
            rows.append((dataclasses.replace(record, collision_energy=ce), vector))
    pred = tmp_path / "sweep_pred.tsv"
    write_prediction_table(str(pred), rows, sparse=True)
    truth_at_25 = tmp_path / "truth25.tsv"
    at_25 = [r for r in records if r.collision_energy == 25.0]
    write_input_table(str(truth_at_25), at_25)
    out = tmp_path / "sweep.json"
    assert main(
        [
            "perturb", "--mode", "nce-sweep", "--truth", str(truth_at_25), "--pred", str(pred),
            "--grid", "20,25,30", "--out", str(out),
        ]
    ) == 0
    payload = json.loads(out.read_text())
    assert payload["argmin_nce"] == 25.0
    curve = {point["nce"]: point["median_sa"] for point in payload["curve"]}
    assert curve[25.0] == 0.0
    assert curve[20.0] > 0.0 and curve[30.0] > 0.0
    assert (tmp_path / "sweep.json.sweep.png").read_bytes()[:4] == PNG_MAGIC


def test_perturb_sweep_flat_curve_ties_to_lowest(corpus, model_path, tmp_path):
    corpus_path, _ = corpus
    out = tmp_path / "flat.json"
    assert main(
        [
            "perturb", "--mode", "nce-sweep", "--truth", corpus_path, "--model", model_path,
            "--grid", "24.9,25.0,25.1", "--out", str(out), "--no-plots",
        ]
    ) == 0
    payload = json.loads(out.read_text())
    sa_values = {point["median_sa"] for point in payload["curve"]}
    assert len(sa_values) == 1  # CE snapping makes the curve flat on this grid
    assert payload["argmin_nce"] == 24.9


def test_perturb_requires_a_predictor(corpus, tmp_path, capsys):
    corpus_path, _ = corpus
    rc = main(
        ["perturb", "--mode", "charge", "--truth", corpus_path, "--out", str(tmp_path / "x.json"), "--no-plots"]
    )
    assert rc == 1
    payload = _last_json_line(capsys.readouterr().err)
    assert payload["error"] == "SchemaError"
    assert "--model or --pred" in payload["message"]


def test_audit_leakage_on_backbone_split(corpus, tmp_path, capsys):
    corpus_path, _ = corpus
    split_out = tmp_path / "split.tsv"
    assert main(["split", "--input", corpus_path, "--out", str(split_out), "--rule", "backbone", "--no-plots"]) == 0
    audit_out = tmp_path / "audit.json"
    assert main(["audit-leakage", "--input", str(split_out), "--out", str(audit_out)]) == 0
    payload = json.loads(audit_out.read_text())
    assert payload["frac_exact"] == 0.0  # backbone-disjoint splits share no sequence
    assert payload["n_test"] >= 1 and payload["n_train"] >= 1
    assert payload["mean_min_edit"] >= 1.0
    assert (tmp_path / "audit.json.distances.png").read_bytes()[:4] == PNG_MAGIC
    rc = main(["audit-leakage", "--input", corpus_path, "--out", str(tmp_path / "a.json"), "--no-plots"])
    assert rc == 1
    assert _last_json_line(capsys.readouterr().err)["error"] == "MissingKeyColumnError"
