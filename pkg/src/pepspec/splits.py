"""Deterministic leakage-aware splitting, sampling, and homology auditing.

Split assignment hashes a per-record key with MD5, interprets the full
16-byte digest as a big-endian integer, and maps it modulo 100 to a
bucket: buckets 0-79 are train, 80-89 val, 90-99 test. Hash inputs are
pipe-joined fields with collision energies rendered at two decimals;
both choices are frozen and golden-file tested so assignments are stable
across platforms and releases.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyInputError, MissingKeyColumnError, QuotaZeroError
from .peptide import PTM_BUCKETS, SpectrumRecord, ptm_metadata, to_canonical_string, to_naked

logger = logging.getLogger(__name__)

SPLIT_LABELS = ("train", "val", "test")
SPLIT_RULES = ("backbone", "modified_sequence", "row_random")

#: PTM buckets sharing the non-unmodified half of a balanced quota, in
#: largest-remainder tie order.
_PTM_QUOTA_ORDER = ("Ox", "Cam", "Ace")


@dataclass(frozen=True)
class SplitAssignment:
    """A deterministic train/val/test assignment for one record."""

    label: str
    bucket: int
    rule: str


@dataclass(frozen=True)
class LeakageAudit:
    """Aggregate nearest-neighbor edit-distance statistics."""

    mean_min_edit: float
    median_min_edit: float
    frac_exact: float
    frac_le1: float
    n_test: int
    n_train: int


@dataclass(frozen=True)
class DisjointnessReport:
    """Pairwise backbone overlaps between labeled splits."""

    violations: int
    overlaps: dict[str, tuple[str, ...]]


def md5_bucket(key: str) -> int:
    """Map a string key to a bucket in [0, 99].

    The full 16-byte MD5 digest of the UTF-8 bytes is read as a
    big-endian unsigned integer and reduced modulo 100.

    Raises:
        EmptyInputError: Empty key.
    """
    if not key:
        raise EmptyInputError("empty hash key")
    digest = hashlib.md5(key.encode("utf-8")).digest()
    return int.from_bytes(digest, "big") % 100


def bucket_label(bucket: int) -> str:
    """Split label for a bucket: 0-79 train, 80-89 val, 90-99 test."""
    if not 0 <= bucket <= 99:
        raise EmptyInputError(f"bucket {bucket} outside [0, 99]")
    if bucket < 80:
        return "train"
    if bucket < 90:
        return "val"
    return "test"


def assign_split(
    record: SpectrumRecord, rule: str, row_index: int | None = None
) -> SplitAssignment:
    """Assign a record to train/val/test under a hash rule.

    Rules: ``backbone`` hashes the naked sequence (PTM variants of one
    backbone always share a label), ``modified_sequence`` hashes the
    canonical modified string, ``row_random`` hashes the sample_key
    column joined with the row index.

    Raises:
        MissingKeyColumnError: row_random without sample_key or row index.
    """
    if rule == "backbone":
        key = to_naked(record.peptide)
    elif rule == "modified_sequence":
        key = to_canonical_string(record.peptide)
    elif rule == "row_random":
        if record.sample_key is not None and row_index is not None:
            key = f"{record.sample_key}|{row_index}"
        elif record.sample_key is not None:
            key = record.sample_key
        elif row_index is not None:
            key = str(row_index)
        else:
            raise MissingKeyColumnError(
                "row_random needs a sample_key column or a row index"
            )
    else:
        raise MissingKeyColumnError(f"unknown split rule {rule!r}")
    bucket = md5_bucket(key)
    return SplitAssignment(label=bucket_label(bucket), bucket=bucket, rule=rule)


def sampling_key(naked: str, charge: int, ce: float, seed: int) -> int:
    """128-bit deterministic sampling key.

    MD5 of ``naked|charge|ce|seed`` with collision energy rendered at two
    decimals; compares as an unsigned integer for a stable total order.
    """
    payload = f"{naked}|{charge}|{ce:.2f}|{seed}"
    return int.from_bytes(hashlib.md5(payload.encode("utf-8")).digest(), "big")


def ood_rank_key(naked: str, charge: int, seed: int = 42) -> int:
    """Rank key omitting collision energy, used for top-N truncation."""
    payload = f"{naked}|{charge}|{seed}"
    return int.from_bytes(hashlib.md5(payload.encode("utf-8")).digest(), "big")


def _record_tiebreak(record: SpectrumRecord) -> tuple[str, int, str, str]:
    return (
        to_canonical_string(record.peptide),
        record.precursor_charge,
        f"{record.collision_energy:.2f}",
        record.raw_file or "",
    )


def select_top_n(
    records: Iterable[SpectrumRecord], n: int, seed: int = 42
) -> list[SpectrumRecord]:
    """Keep the n records with the smallest OOD rank keys.

    Selection is a pure function of record values and seed: permuting the
    input stream cannot change the result. Memory stays O(n).

    Raises:
        QuotaZeroError: n < 1.
    """
    if n < 1:
        raise QuotaZeroError(f"top-n count must be >= 1, got {n}")
    keyed = (
        ((ood_rank_key(to_naked(r.peptide), r.precursor_charge, seed), *_record_tiebreak(r)), r)
        for r in records
    )
    smallest = heapq.nsmallest(n, keyed, key=lambda pair: pair[0])
    return [record for _, record in smallest]


class _MaxHeapItem:
    """Inverted comparison wrapper so heapq acts as a bounded max-heap."""

    __slots__ = ("key", "record")

    def __init__(self, key: tuple, record: SpectrumRecord) -> None:
        self.key = key
        self.record = record

    def __lt__(self, other: "_MaxHeapItem") -> bool:
        return self.key > other.key


def ptm_quotas(quota: int) -> dict[str, int]:
    """Per-bucket quotas: half unmodified, rest split by largest remainder.

    The three PTM buckets have equal fractional shares, so leftover units
    go to Ox, then Cam, then Ace. Quota 100 yields 50/17/17/16.

    Raises:
        QuotaZeroError: quota < 1.
    """
    if quota < 1:
        raise QuotaZeroError(f"sampling quota must be >= 1, got {quota}")
    unmod = quota // 2
    remaining = quota - unmod
    base = remaining // 3
    extra = remaining - 3 * base
    quotas = {"Unmod": unmod}
    for i, bucket in enumerate(_PTM_QUOTA_ORDER):
        quotas[bucket] = base + (1 if i < extra else 0)
    return quotas


def balanced_sample(
    records: Iterable[SpectrumRecord], quota: int, seed: int = 42
) -> list[SpectrumRecord]:
    """PTM-balanced deterministic sample of up to ``quota`` records.

    Unmodified records fill half the quota; the rest is divided across
    Ox/Cam/Ace without oversampling (a short bucket yields fewer rows,
    never duplicates). Within each bucket records are taken in ascending
    sampling-key order, so any stream order gives the same selection.
    Memory is bounded by the quota, not the stream length.

    Raises:
        QuotaZeroError: quota < 1.
    """
    quotas = ptm_quotas(quota)
    heaps: dict[str, list[_MaxHeapItem]] = {bucket: [] for bucket in PTM_BUCKETS}
    for record in records:
        _, bucket = ptm_metadata(record.peptide)
        limit = quotas[bucket]
        if limit == 0:
            continue
        key = (
            sampling_key(
                to_naked(record.peptide),
                record.precursor_charge,
                record.collision_energy,
                seed,
            ),
            *_record_tiebreak(record),
        )
        heap = heaps[bucket]
        if len(heap) < limit:
            heapq.heappush(heap, _MaxHeapItem(key, record))
        elif key < heap[0].key:
            heapq.heapreplace(heap, _MaxHeapItem(key, record))
    selected: list[SpectrumRecord] = []
    for bucket in PTM_BUCKETS:
        items = sorted(heaps[bucket], key=lambda item: item.key)
        selected.extend(item.record for item in items)
    return selected


def verify_disjoint(backbones_by_label: Mapping[str, Iterable[str]]) -> DisjointnessReport:
    """Report pairwise backbone intersections between labeled splits.

    Empty by construction under the backbone rule; the modified-sequence
    and row-random rules can and do produce violations.
    """
    sets = {label: set(values) for label, values in backbones_by_label.items()}
    overlaps: dict[str, tuple[str, ...]] = {}
    violations = 0
    for a, b in combinations(sorted(sets), 2):
        shared = tuple(sorted(sets[a] & sets[b]))
        overlaps[f"{a}/{b}"] = shared
        violations += len(shared)
    return DisjointnessReport(violations=violations, overlaps=overlaps)


def edit_distance(a: str, b: str, upper_bound: int | None = None) -> int:
    """Levenshtein distance (unit insert/delete/substitute) by dynamic programming.

    With ``upper_bound`` set, the scan may stop early once the distance
    provably exceeds it; the return value is then some integer greater
    than ``upper_bound`` rather than the exact distance. Results at or
    below the bound are always exact.
    """
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if upper_bound is not None and abs(len(a) - len(b)) > upper_bound:
        return upper_bound + 1
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    current = [0] * (len(b) + 1)
    for i, ch_a in enumerate(a, start=1):
        current[0] = i
        row_min = i
        for j, ch_b in enumerate(b, start=1):
            cost = 0 if ch_a == ch_b else 1
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + cost,
            )
            if current[j] < row_min:
                row_min = current[j]
        if upper_bound is not None and row_min > upper_bound:
            return upper_bound + 1
        previous, current = current, previous
    return previous[len(b)]


def min_edit_distances(
    test_backbones: Iterable[str], train_backbones: Iterable[str]
) -> list[int]:
    """Per unique test backbone, the minimum edit distance to any train backbone.

    Candidates are scanned in order of length difference, which lower
    bounds the distance, so whole length groups are skipped once they
    cannot improve the running best. Pruning never changes results.

    Raises:
        EmptyInputError: Either side is empty.
    """
    test_set = sorted(set(test_backbones))
    train_set = set(train_backbones)
    if not test_set or not train_set:
        raise EmptyInputError("leakage audit needs non-empty test and train sets")
    by_length: dict[int, list[str]] = {}
    for backbone in sorted(train_set):
        by_length.setdefault(len(backbone), []).append(backbone)
    lengths = sorted(by_length)
    distances: list[int] = []
    for target in test_set:
        if target in train_set:
            distances.append(0)
            continue
        best: int | None = None
        for length in sorted(lengths, key=lambda l: abs(l - len(target))):
            gap = abs(length - len(target))
            if best is not None and gap >= best:
                break
            for candidate in by_length[length]:
                bound = None if best is None else best - 1
                d = edit_distance(target, candidate, upper_bound=bound)
                if best is None or d < best:
                    best = d
                    if best == 1:
                        break
            if best == 1:
                break
        distances.append(best if best is not None else 0)
    return distances


def audit_from_distances(
    distances: Iterable[int], n_test: int, n_train: int
) -> LeakageAudit:
    """Build a LeakageAudit from precomputed minimum distances.

    Raises:
        EmptyInputError: No distances.
    """
    arr = np.asarray(list(distances), dtype=float)
    if arr.size == 0:
        raise EmptyInputError("no distances to audit")
    return LeakageAudit(
        mean_min_edit=float(arr.mean()),
        median_min_edit=float(np.median(arr)),
        frac_exact=float((arr == 0).mean()),
        frac_le1=float((arr <= 1).mean()),
        n_test=n_test,
        n_train=n_train,
    )


def leakage_audit(
    test_backbones: Iterable[str], train_backbones: Iterable[str]
) -> LeakageAudit:
    """Aggregate nearest-neighbor edit-distance statistics for a split.

    Raises:
        EmptyInputError: Either side is empty.
    """
    test_set = set(test_backbones)
    train_set = set(train_backbones)
    distances = min_edit_distances(test_set, train_set)
    return audit_from_distances(distances, len(test_set), len(train_set))
