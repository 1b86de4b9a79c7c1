"""Shared synthetic-data builders for the test suite."""

from __future__ import annotations

import numpy as np

from pepspec.ions import DEFAULT_SPACE, CanonicalSpace, theoretical_mz
from pepspec.peptide import ModifiedPeptide, SpectrumRecord, parse_modified_sequence
from pepspec.projection import RawSpectrum, project_ground_truth
from pepspec.tables import format_float

RESIDUES = "ACDEFGHIKLMNPQRSTVWY"


def random_naked(rng: np.random.Generator, length: int | None = None) -> str:
    """A random backbone of in-scope length."""
    if length is None:
        length = int(rng.integers(6, 41))
    return "".join(RESIDUES[i] for i in rng.integers(0, len(RESIDUES), length))


def random_modified(rng: np.random.Generator, length: int | None = None) -> ModifiedPeptide:
    """A random peptide carrying zero or more legal modifications."""
    naked = random_naked(rng, length)
    site_mods = []
    used: set[int] = set()
    for pos, ch in enumerate(naked, start=1):
        if ch == "C" and rng.random() < 0.5:
            site_mods.append((pos, 4))
            used.add(pos)
        elif ch == "M" and rng.random() < 0.5:
            site_mods.append((pos, 35))
            used.add(pos)
    nterm = 1 if rng.random() < 0.3 else None
    return ModifiedPeptide(residues=naked, site_mods=tuple(site_mods), nterm_mod=nterm)


def synthetic_record(
    sequence: str,
    charge: int = 2,
    ce: float = 25.0,
    seed: int = 0,
    raw_file: str | None = None,
    space: CanonicalSpace = DEFAULT_SPACE,
) -> SpectrumRecord:
    """A record whose peaks sit exactly at the theoretical ion positions."""
    peptide = parse_modified_sequence(sequence)
    _, mz = theoretical_mz(peptide, charge, space)
    rng = np.random.default_rng(seed)
    intensity = rng.uniform(0.05, 1.0, mz.size)
    return SpectrumRecord(
        peptide=peptide,
        precursor_charge=charge,
        collision_energy=ce,
        mz=tuple(float(v) for v in mz),
        intensity=tuple(float(v) for v in intensity),
        raw_file=raw_file,
    )


def truth_vector(record: SpectrumRecord, space: CanonicalSpace = DEFAULT_SPACE):
    """Projected ground truth for a record."""
    return project_ground_truth(
        RawSpectrum(record.mz, record.intensity),
        record.peptide,
        record.precursor_charge,
        space,
    )


def write_input_table(
    path,
    records,
    *,
    with_peaks: bool = True,
    with_ce: bool = True,
    extra_columns: dict[str, list[str]] | None = None,
) -> None:
    """Write SpectrumRecords as a raw input TSV for CLI tests."""
    from pepspec.peptide import to_canonical_string

    columns = ["modified_sequence", "precursor_charge"]
    if with_ce:
        columns.append("collision_energy")
    if with_peaks:
        columns += ["mz_list", "intensity_list"]
    if any(r.raw_file for r in records):
        columns.append("raw_file")
    extra_columns = extra_columns or {}
    columns += list(extra_columns)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\t".join(columns) + "\n")
        for i, record in enumerate(records):
            cells = [to_canonical_string(record.peptide), str(record.precursor_charge)]
            if with_ce:
                cells.append(format_float(record.collision_energy))
            if with_peaks:
                cells.append(";".join(format_float(v) for v in record.mz))
                cells.append(";".join(format_float(v) for v in record.intensity))
            if "raw_file" in columns:
                cells.append(record.raw_file or "")
            for name in extra_columns:
                cells.append(extra_columns[name][i])
            handle.write("\t".join(cells) + "\n")
