"""Tests for hash splits, deterministic sampling, and the leakage audit."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

import oracles
from helpers import synthetic_record
from pepspec.errors import EmptyInputError, MissingKeyColumnError, QuotaZeroError
from pepspec.peptide import ModifiedPeptide, SpectrumRecord, to_naked
from pepspec.splits import (
    assign_split,
    audit_from_distances,
    balanced_sample,
    bucket_label,
    edit_distance,
    leakage_audit,
    md5_bucket,
    min_edit_distances,
    ood_rank_key,
    ptm_quotas,
    sampling_key,
    select_top_n,
    verify_disjoint,
)


def test_md5_bucket_goldens():
    assert md5_bucket("PEPTIDE") == 28
    assert md5_bucket("ACDEFGHIK") == 51
    assert md5_bucket("PEPTIDE|2|25.00|42") == 3
    with pytest.raises(EmptyInputError):
        md5_bucket("")


def test_bucket_label_boundaries():
    assert bucket_label(0) == "train"
    assert bucket_label(79) == "train"
    assert bucket_label(80) == "val"
    assert bucket_label(89) == "val"
    assert bucket_label(90) == "test"
    assert bucket_label(99) == "test"
    with pytest.raises(EmptyInputError):
        bucket_label(100)


def _record(seq: str, charge: int = 2, ce: float = 25.0, **kwargs) -> SpectrumRecord:
    from pepspec.peptide import parse_modified_sequence

    return SpectrumRecord(parse_modified_sequence(seq), charge, ce, **kwargs)


def test_backbone_rule_groups_ptm_variants():
    naked = _record("ACDEFGHIK")
    cam = _record("AC[cam]DEFGHIK")
    a = assign_split(naked, "backbone")
    b = assign_split(cam, "backbone")
    assert a.label == b.label
    assert a.bucket == b.bucket == md5_bucket("ACDEFGHIK")
    assert a.rule == "backbone"


def test_modified_sequence_rule_hashes_canonical_form():
    plain = assign_split(_record("ACDEFGHIK"), "modified_sequence")
    cam = assign_split(_record("AC[cam]DEFGHIK"), "modified_sequence")
    assert plain.bucket == md5_bucket("ACDEFGHIK")
    assert cam.bucket == md5_bucket("AC[UNIMOD:4]DEFGHIK")
    assert plain.bucket != cam.bucket


def test_row_random_rule_key_sources():
    keyed = _record("ACDEFGHIK", sample_key="row-7")
    both = assign_split(keyed, "row_random", row_index=3)
    assert both.bucket == md5_bucket("row-7|3")
    key_only = assign_split(keyed, "row_random")
    assert key_only.bucket == md5_bucket("row-7")
    index_only = assign_split(_record("ACDEFGHIK"), "row_random", row_index=11)
    assert index_only.bucket == md5_bucket("11")
    with pytest.raises(MissingKeyColumnError):
        assign_split(_record("ACDEFGHIK"), "row_random")
    with pytest.raises(MissingKeyColumnError):
        assign_split(_record("ACDEFGHIK"), "no_such_rule")


def test_split_fractions_approach_80_10_10():
    rng = np.random.default_rng(47)
    counts = {"train": 0, "val": 0, "test": 0}
    n = 20000
    for _ in range(n):
        key = "".join("ACDEFGHIKLMNPQRSTVWY"[i] for i in rng.integers(0, 20, 10))
        counts[bucket_label(md5_bucket(key))] += 1
    assert counts["train"] / n == pytest.approx(0.80, abs=0.02)
    assert counts["val"] / n == pytest.approx(0.10, abs=0.02)
    assert counts["test"] / n == pytest.approx(0.10, abs=0.02)


def test_sampling_key_renders_ce_at_two_decimals():
    assert sampling_key("PEPTIDE", 2, 25.0, 42) == sampling_key("PEPTIDE", 2, 25.0009, 42)
    assert sampling_key("PEPTIDE", 2, 25.0, 42) != sampling_key("PEPTIDE", 2, 25.01, 42)
    assert sampling_key("PEPTIDE", 2, 25.0, 42) != sampling_key("PEPTIDE", 2, 25.0, 43)


def test_ood_rank_key_ignores_collision_energy():
    record_a = _record("ACDEFGHIK", ce=20.0)
    record_b = _record("ACDEFGHIK", ce=35.0)
    key = lambda r: ood_rank_key(to_naked(r.peptide), r.precursor_charge, 42)
    assert key(record_a) == key(record_b)
    assert ood_rank_key("ACDEFGHIK", 2, 42) != ood_rank_key("ACDEFGHIK", 3, 42)


def test_select_top_n_is_order_invariant_and_bounded():
    records = [_record("ACDEFGHIK", charge=z, ce=float(ce)) for z in (1, 2, 3) for ce in (20, 25, 30)]
    chosen = select_top_n(records, 4, seed=42)
    assert len(chosen) == 4
    reversed_choice = select_top_n(list(reversed(records)), 4, seed=42)
    assert [to_naked(r.peptide) for r in chosen] == [to_naked(r.peptide) for r in reversed_choice]
    assert [r.precursor_charge for r in chosen] == [r.precursor_charge for r in reversed_choice]
    assert [r.collision_energy for r in chosen] == [r.collision_energy for r in reversed_choice]
    everything = select_top_n(records, 100, seed=42)
    assert len(everything) == len(records)
    with pytest.raises(QuotaZeroError):
        select_top_n(records, 0)


def test_ptm_quotas_largest_remainder():
    assert ptm_quotas(100) == {"Unmod": 50, "Ox": 17, "Cam": 17, "Ace": 16}
    assert ptm_quotas(4) == {"Unmod": 2, "Ox": 1, "Cam": 1, "Ace": 0}
    assert ptm_quotas(7) == {"Unmod": 3, "Ox": 2, "Cam": 1, "Ace": 1}
    assert sum(ptm_quotas(13).values()) == 13
    with pytest.raises(QuotaZeroError):
        ptm_quotas(0)


def test_balanced_sample_fills_quotas_without_oversampling():
    records = []
    for i in range(20):
        records.append(_record("ACDEFGHIK", ce=float(20 + i)))
        records.append(_record("M[ox]CDEFGHIK", ce=float(20 + i)))
        records.append(_record("AC[cam]DEFGHIK", ce=float(20 + i)))
    records.append(_record("[ac]ACDEFGHIK"))  # a single Ace record
    chosen = balanced_sample(records, 12, seed=42)
    from pepspec.peptide import ptm_metadata

    by_bucket = {}
    for record in chosen:
        by_bucket.setdefault(ptm_metadata(record.peptide)[1], []).append(record)
    assert len(by_bucket["Unmod"]) == 6
    assert len(by_bucket["Ox"]) == 2
    assert len(by_bucket["Cam"]) == 2
    assert len(by_bucket["Ace"]) == 1  # short bucket yields fewer, never duplicates
    assert len(chosen) == 11


def test_balanced_sample_order_invariant_and_seeded():
    records = [_record("ACDEFGHIK", ce=float(c)) for c in range(20, 40)]
    forward = balanced_sample(records, 6, seed=42)
    backward = balanced_sample(list(reversed(records)), 6, seed=42)
    assert [r.collision_energy for r in forward] == [r.collision_energy for r in backward]
    other_seed = balanced_sample(records, 6, seed=7)
    assert [r.collision_energy for r in forward] != [r.collision_energy for r in other_seed]


def test_verify_disjoint_counts_and_sorts_overlaps():
    report = verify_disjoint(
        {"train": {"AAA", "BBB"}, "val": {"BBB"}, "test": {"AAA", "CCC"}}
    )
    assert report.violations == 2
    assert report.overlaps["test/train"] == ("AAA",)
    assert report.overlaps["train/val"] == ("BBB",)
    assert report.overlaps["test/val"] == ()
    clean = verify_disjoint({"train": {"AAA"}, "test": {"BBB"}})
    assert clean.violations == 0


def test_edit_distance_classic_golden():
    assert edit_distance("kitten", "sitting") == 3
    assert edit_distance("", "abc") == 3
    assert edit_distance("abc", "") == 3
    assert edit_distance("same", "same") == 0


def test_edit_distance_matches_brute_force_exhaustive_short():
    alphabet = "ACD"
    strings = [""]
    for length in range(1, 4):
        strings += ["".join(p) for p in itertools.product(alphabet, repeat=length)]
    for a in strings:
        for b in strings:
            assert edit_distance(a, b) == oracles.brute_levenshtein(a, b)


def test_edit_distance_matches_brute_force_sampled():
    rng = np.random.default_rng(53)
    alphabet = "ACD"
    for _ in range(500):
        a = "".join(alphabet[i] for i in rng.integers(0, 3, rng.integers(0, 9)))
        b = "".join(alphabet[i] for i in rng.integers(0, 3, rng.integers(0, 9)))
        assert edit_distance(a, b) == oracles.brute_levenshtein(a, b)


def test_edit_distance_upper_bound_semantics():
    rng = np.random.default_rng(59)
    alphabet = "ACDEF"
    for _ in range(300):
        a = "".join(alphabet[i] for i in rng.integers(0, 5, rng.integers(1, 10)))
        b = "".join(alphabet[i] for i in rng.integers(0, 5, rng.integers(1, 10)))
        exact = oracles.brute_levenshtein(a, b)
        for bound in (0, 1, 2, 5):
            result = edit_distance(a, b, upper_bound=bound)
            if exact <= bound:
                assert result == exact
            else:
                assert result > bound


def test_min_edit_distances_matches_brute_force():
    rng = np.random.default_rng(61)
    alphabet = "ACDEFG"
    make = lambda: "".join(alphabet[i] for i in rng.integers(0, 6, rng.integers(4, 9)))
    train = {make() for _ in range(40)}
    test = {make() for _ in range(15)}
    got = min_edit_distances(test, train)
    expected = [
        min(oracles.brute_levenshtein(t, c) for c in train) for t in sorted(set(test))
    ]
    assert got == expected
    with pytest.raises(EmptyInputError):
        min_edit_distances(set(), train)


def test_leakage_audit_statistics():
    audit = audit_from_distances([0, 0, 1, 3], n_test=4, n_train=10)
    assert audit.frac_exact == 0.5
    assert audit.frac_le1 == 0.75
    assert audit.mean_min_edit == 1.0
    assert audit.median_min_edit == 0.5
    assert (audit.n_test, audit.n_train) == (4, 10)
    with pytest.raises(EmptyInputError):
        audit_from_distances([], 0, 0)


def test_leakage_audit_disjoint_fixture_has_zero_exact_fraction():
    train = {"ACDEFGHIK", "LMNPQRSTV", "WYACDEFGH"}
    test = {"ACDEFGHIW", "LMNPQRSTA"}
    audit = leakage_audit(test, train)
    assert audit.frac_exact == 0.0
    assert audit.frac_le1 == 1.0  # both test backbones are one edit away
    identical = leakage_audit({"ACDEFGHIK"}, train)
    assert identical.frac_exact == 1.0
