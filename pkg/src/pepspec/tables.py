"""Tab-separated table formats, streaming readers, and report writers.

All files are UTF-8 with LF line endings, '.' decimal separators, and
';' list separators. Spectral tables carry one spectrum per row with
embedded peak lists; prediction tables carry canonical vectors either
dense (234 values) or sparse ("index:value" entries). Report JSON is
byte-stable: keys sorted, floats rendered by repr, no timestamps (the
run manifest is the only artifact carrying a timestamp).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TypeVar

import numpy as np

from ._version import __version__
from .errors import PepspecError, SchemaError
from .ions import DEFAULT_SPACE, CanonicalSpace, valid_mask
from .metrics import MetricRow
from .peptide import ModifiedPeptide, SpectrumRecord, parse_modified_sequence, to_canonical_string
from .projection import CanonicalVector, make_canonical_vector

logger = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")

#: Columns every spectral table must carry.
REQUIRED_COLUMNS = ("modified_sequence", "precursor_charge")
#: Peak-list columns, required only by operations that read spectra.
PEAK_COLUMNS = ("mz_list", "intensity_list")
#: Recognized optional columns, echoed through when present.
OPTIONAL_COLUMNS = (
    "collision_energy",
    "raw_file",
    "andromeda_score",
    "mass_error_ppm",
    "split",
    "sample_key",
)

#: Column order used when writing metric rows.
METRIC_COLUMNS = (
    "modified_sequence",
    "precursor_charge",
    "collision_energy",
    "raw_file",
    "k",
    "sa",
    "sas",
    "pcc",
    "length_bin",
    "ptm_bucket",
    "nce_bin",
)

LIST_SEPARATOR = ";"


def format_float(value: float) -> str:
    """Shortest round-trip decimal rendering of a float."""
    return repr(float(value))


def _parse_float_list(cell: str, what: str) -> tuple[float, ...]:
    if not cell:
        return ()
    try:
        return tuple(float(item) for item in cell.split(LIST_SEPARATOR))
    except ValueError as exc:
        raise SchemaError(f"malformed {what} list: {exc}") from exc


def worker_count() -> int:
    """Worker-pool size from the PEPSPEC_THREADS environment variable."""
    raw = os.environ.get("PEPSPEC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring non-integer PEPSPEC_THREADS=%r", raw)
        return 1


def parallel_map(fn: Callable[[T], U], items: Iterable[T]) -> list[U]:
    """Order-preserving map over a thread pool of worker_count() workers."""
    materialized = list(items)
    workers = worker_count()
    if workers <= 1 or len(materialized) < 2:
        return [fn(item) for item in materialized]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, materialized))


class SpectralTableReader:
    """Streaming reader for spectral tables.

    Validates the header eagerly; iterating re-opens the file, so a
    reader supports multiple passes at constant memory. Malformed rows
    raise a line-numbered SchemaError, or are counted and skipped when
    ``on_error="skip"``.
    """

    def __init__(
        self,
        path: str,
        *,
        default_nce: float = 25.0,
        need_peaks: bool = False,
        on_error: str = "fail",
    ) -> None:
        if on_error not in ("fail", "skip"):
            raise SchemaError(f"on_error must be 'fail' or 'skip', got {on_error!r}")
        self.path = path
        self.default_nce = default_nce
        self.need_peaks = need_peaks
        self.on_error = on_error
        self.skipped = 0
        try:
            with open(path, encoding="utf-8", newline="") as handle:
                header_row = next(csv.reader(handle, delimiter="\t"), None)
        except OSError as exc:
            raise SchemaError(f"cannot read {path}: {exc}") from exc
        if not header_row:
            raise SchemaError(f"{path}: missing header row")
        self.columns: tuple[str, ...] = tuple(header_row)
        self._index = {name: i for i, name in enumerate(self.columns)}
        missing = [c for c in REQUIRED_COLUMNS if c not in self._index]
        if need_peaks:
            missing += [c for c in PEAK_COLUMNS if c not in self._index]
        if missing:
            raise SchemaError(f"{path}: missing required columns {', '.join(missing)}")

    def has_column(self, name: str) -> bool:
        return name in self._index

    def _cell(self, row: Sequence[str], name: str) -> str:
        index = self._index.get(name)
        if index is None or index >= len(row):
            return ""
        return row[index].strip()

    def _parse_row(self, row: Sequence[str]) -> SpectrumRecord:
        peptide = parse_modified_sequence(self._cell(row, "modified_sequence"))
        charge = int(self._cell(row, "precursor_charge"))
        ce_cell = self._cell(row, "collision_energy")
        ce = float(ce_cell) if ce_cell else self.default_nce
        mz = _parse_float_list(self._cell(row, "mz_list"), "mz")
        intensity = _parse_float_list(self._cell(row, "intensity_list"), "intensity")
        if len(mz) != len(intensity):
            raise SchemaError(
                f"mz list has {len(mz)} entries but intensity list has {len(intensity)}"
            )
        score_cell = self._cell(row, "andromeda_score")
        ppm_cell = self._cell(row, "mass_error_ppm")
        return SpectrumRecord(
            peptide=peptide,
            precursor_charge=charge,
            collision_energy=ce,
            mz=mz,
            intensity=intensity,
            raw_file=self._cell(row, "raw_file") or None,
            andromeda_score=float(score_cell) if score_cell else None,
            mass_error_ppm=float(ppm_cell) if ppm_cell else None,
            split=self._cell(row, "split") or None,
            sample_key=self._cell(row, "sample_key") or None,
        )

    def __iter__(self) -> Iterator[tuple[int, SpectrumRecord]]:
        with open(self.path, encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle, delimiter="\t")
            next(reader)
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                try:
                    record = self._parse_row(row)
                except (PepspecError, ValueError) as exc:
                    message = f"{self.path} line {lineno}: {exc}"
                    if self.on_error == "skip":
                        self.skipped += 1
                        logger.warning("skipping malformed row: %s", message)
                        continue
                    raise SchemaError(message) from exc
                yield lineno, record


def write_spectral_table(
    path: str,
    rows: Iterable[tuple[SpectrumRecord, Mapping[str, str]]],
    columns: Sequence[str],
) -> int:
    """Write records (plus per-row extra cells) under an explicit header.

    Standard columns render from the record; any other column is looked
    up in the row's extras mapping. Returns the number of rows written.
    """
    written = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\t".join(columns) + "\n")
        for record, extras in rows:
            cells = []
            for column in columns:
                cells.append(_render_cell(record, extras, column))
            handle.write("\t".join(cells) + "\n")
            written += 1
    return written


def _render_cell(record: SpectrumRecord, extras: Mapping[str, str], column: str) -> str:
    if column in extras:
        return extras[column]
    if column == "modified_sequence":
        return to_canonical_string(record.peptide)
    if column == "precursor_charge":
        return str(record.precursor_charge)
    if column == "collision_energy":
        return format_float(record.collision_energy)
    if column == "mz_list":
        return LIST_SEPARATOR.join(format_float(v) for v in record.mz)
    if column == "intensity_list":
        return LIST_SEPARATOR.join(format_float(v) for v in record.intensity)
    if column == "raw_file":
        return record.raw_file or ""
    if column == "andromeda_score":
        return "" if record.andromeda_score is None else format_float(record.andromeda_score)
    if column == "mass_error_ppm":
        return "" if record.mass_error_ppm is None else format_float(record.mass_error_ppm)
    if column == "split":
        return record.split or ""
    if column == "sample_key":
        return record.sample_key or ""
    return ""


def join_key(
    canonical: str, charge: int, ce: float, raw_file: str | None = None
) -> tuple:
    """Key aligning prediction rows to truth rows.

    Collision energy is rendered at two decimals; raw_file participates
    only when the prediction table carries that column.
    """
    base = (canonical, int(charge), f"{ce:.2f}")
    if raw_file is None:
        return base
    return base + (raw_file,)


class PredictionLookup:
    """A prediction table indexed by join key, parsed lazily per row."""

    def __init__(self, path: str, space: CanonicalSpace = DEFAULT_SPACE) -> None:
        self.path = path
        self.space = space
        self.cells: dict[tuple, str] = {}
        self.duplicates = 0
        try:
            handle = open(path, encoding="utf-8", newline="")
        except OSError as exc:
            raise SchemaError(f"cannot read {path}: {exc}") from exc
        with handle:
            reader = csv.reader(handle, delimiter="\t")
            header = next(reader, None)
            if not header:
                raise SchemaError(f"{path}: missing header row")
            index = {name: i for i, name in enumerate(header)}
            required = ("modified_sequence", "precursor_charge", "collision_energy", "canonical_vector")
            missing = [c for c in required if c not in index]
            if missing:
                raise SchemaError(f"{path}: missing required columns {', '.join(missing)}")
            self.has_raw_file = "raw_file" in index
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                try:
                    canonical = to_canonical_string(
                        parse_modified_sequence(row[index["modified_sequence"]].strip())
                    )
                    charge = int(row[index["precursor_charge"]].strip())
                    ce = float(row[index["collision_energy"]].strip())
                    raw_file = row[index["raw_file"]].strip() if self.has_raw_file else None
                except (PepspecError, ValueError, IndexError) as exc:
                    raise SchemaError(f"{path} line {lineno}: {exc}") from exc
                key = join_key(canonical, charge, ce, raw_file if self.has_raw_file else None)
                if key in self.cells:
                    self.duplicates += 1
                vector_index = index["canonical_vector"]
                self.cells[key] = row[vector_index].strip() if vector_index < len(row) else ""
        self.used: set[tuple] = set()

    def __len__(self) -> int:
        return len(self.cells)

    def parse_cell(self, cell: str) -> np.ndarray:
        """Decode one canonical_vector cell (dense or sparse form)."""
        values = np.zeros(self.space.dim)
        if not cell:
            return values
        if ":" in cell:
            for entry in cell.split(LIST_SEPARATOR):
                if not entry:
                    continue
                pos_text, _, value_text = entry.partition(":")
                try:
                    position = int(pos_text)
                    value = float(value_text)
                except ValueError as exc:
                    raise SchemaError(f"malformed sparse entry {entry!r}") from exc
                if not 0 <= position < self.space.dim:
                    raise SchemaError(f"sparse index {position} outside [0, {self.space.dim - 1}]")
                values[position] = value
            return values
        parts = cell.split(LIST_SEPARATOR)
        if len(parts) != self.space.dim:
            raise SchemaError(
                f"dense canonical_vector has {len(parts)} values, expected {self.space.dim}"
            )
        try:
            return np.asarray([float(p) for p in parts])
        except ValueError as exc:
            raise SchemaError(f"malformed dense canonical_vector: {exc}") from exc

    def take(
        self, canonical: str, charge: int, ce: float, raw_file: str | None
    ) -> np.ndarray | None:
        """Values for a truth row's key, or None; marks the key as used."""
        key = join_key(canonical, charge, ce, raw_file if self.has_raw_file else None)
        cell = self.cells.get(key)
        if cell is None:
            return None
        self.used.add(key)
        return self.parse_cell(cell)

    def unused_count(self) -> int:
        """Prediction rows never matched by any truth row."""
        return len(self.cells) - len(self.used)


class TablePredictor:
    """Predictor backed by a prediction table keyed on (sequence, z, CE)."""

    def __init__(self, lookup: PredictionLookup) -> None:
        if lookup.has_raw_file:
            raise SchemaError(
                "a prediction table with a raw_file column cannot serve as a predictor"
            )
        self.lookup = lookup

    def predict(self, peptide: ModifiedPeptide, charge: int, nce: float) -> CanonicalVector:
        canonical = to_canonical_string(peptide)
        values = self.lookup.take(canonical, charge, nce, None)
        if values is None:
            raise SchemaError(
                f"no prediction for ({canonical}, z={charge}, ce={nce:.2f})"
            )
        return make_canonical_vector(values, valid_mask(peptide, charge, self.lookup.space))


def write_prediction_table(
    path: str,
    rows: Iterable[tuple[SpectrumRecord, CanonicalVector]],
    *,
    sparse: bool = False,
    include_raw_file: bool = False,
) -> int:
    """Write canonical vectors as a prediction table; returns row count."""
    columns = ["modified_sequence", "precursor_charge", "collision_energy"]
    if include_raw_file:
        columns.append("raw_file")
    columns.append("canonical_vector")
    written = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\t".join(columns) + "\n")
        for record, vector in rows:
            if sparse:
                nonzero = np.flatnonzero(vector.values)
                cell = LIST_SEPARATOR.join(
                    f"{int(i)}:{format_float(vector.values[i])}" for i in nonzero
                )
            else:
                cell = LIST_SEPARATOR.join(format_float(v) for v in vector.values)
            cells = [
                to_canonical_string(record.peptide),
                str(record.precursor_charge),
                format_float(record.collision_energy),
            ]
            if include_raw_file:
                cells.append(record.raw_file or "")
            cells.append(cell)
            handle.write("\t".join(cells) + "\n")
            written += 1
    return written


def write_metric_rows(path: str, rows: Sequence[MetricRow]) -> None:
    """Write per-spectrum metric rows as a TSV."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\t".join(METRIC_COLUMNS) + "\n")
        for row in rows:
            handle.write(
                "\t".join(
                    (
                        row.sequence or "",
                        str(row.charge),
                        "" if row.collision_energy is None else format_float(row.collision_energy),
                        row.raw_file or "",
                        str(row.k),
                        format_float(row.sa),
                        format_float(row.sas),
                        format_float(row.pcc),
                        row.length_bin,
                        row.ptm_bucket,
                        row.nce_bin,
                    )
                )
                + "\n"
            )


def read_metric_rows(path: str) -> list[MetricRow]:
    """Read a per-spectrum metrics TSV written by write_metric_rows."""
    rows: list[MetricRow] = []
    try:
        handle = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle, delimiter="\t")
        header = next(reader, None)
        if not header:
            raise SchemaError(f"{path}: missing header row")
        index = {name: i for i, name in enumerate(header)}
        missing = [c for c in ("sa", "sas", "pcc", "k", "length_bin", "precursor_charge", "ptm_bucket", "nce_bin") if c not in index]
        if missing:
            raise SchemaError(f"{path}: missing required columns {', '.join(missing)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue

            def cell(name: str) -> str:
                i = index.get(name)
                return row[i].strip() if i is not None and i < len(row) else ""

            try:
                rows.append(
                    MetricRow(
                        sa=float(cell("sa")),
                        sas=float(cell("sas")),
                        pcc=float(cell("pcc")),
                        k=int(cell("k")),
                        length_bin=cell("length_bin"),
                        charge=int(cell("precursor_charge")),
                        ptm_bucket=cell("ptm_bucket"),
                        nce_bin=cell("nce_bin"),
                        sequence=cell("modified_sequence") or None,
                        collision_energy=float(cell("collision_energy")) if cell("collision_energy") else None,
                        raw_file=cell("raw_file") or None,
                    )
                )
            except ValueError as exc:
                raise SchemaError(f"{path} line {lineno}: {exc}") from exc
    return rows


def jsonify(value):
    """Convert numpy scalars/arrays and dataclasses to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonify(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return jsonify(dataclasses.asdict(value))
    return value


def report_text(payload) -> str:
    """Byte-stable JSON report text: sorted keys, repr floats, trailing LF."""
    return json.dumps(jsonify(payload), sort_keys=True, indent=2) + "\n"


def write_report(path: str, payload) -> None:
    """Write a byte-stable JSON report."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(report_text(payload))


def file_sha256(path: str) -> str:
    """Hex SHA-256 digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(
    primary_output: str,
    *,
    command: str,
    argv: Sequence[str],
    config: Mapping,
    inputs: Sequence[str],
    outputs: Sequence[str],
    stats: Mapping | None = None,
) -> str:
    """Write the run manifest next to the primary output.

    The manifest records configuration, seeds, input digests, tool
    version, argv, and the run timestamp. It is the only artifact that
    carries a timestamp, so every other report stays byte-identical
    across reruns.
    """
    path = f"{primary_output}.manifest.json"
    payload = {
        "command": command,
        "argv": list(argv),
        "config": jsonify(dict(config)),
        "tool_version": __version__,
        "inputs": {input_path: file_sha256(input_path) for input_path in inputs},
        "outputs": sorted(str(p) for p in outputs),
        "stats": jsonify(dict(stats)) if stats else {},
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")
    return path
