"""Stratified reporting and physical-sensitivity probes.

The probes operate on any object satisfying the Predictor protocol: a
``predict(peptide, charge, nce)`` method returning a CanonicalVector.
The trained baseline satisfies it directly, as does a prediction table
loaded from file. All probes are deterministic given the predictor, the
evaluation rows, and the grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import EmptyInputError, MissingBaselineBinError
from .metrics import BootstrapCi, MetricRow, bootstrap_ci, spectral_angle
from .peptide import PTM_BUCKETS, ModifiedPeptide, SpectrumRecord
from .projection import CanonicalVector, make_canonical_vector

logger = logging.getLogger(__name__)

#: Stratification axes exposed by reports.
STRAT_AXES = ("length_bin", "charge", "ptm_type", "nce_bin")

_AXIS_ATTR = {
    "length_bin": "length_bin",
    "charge": "charge",
    "ptm_type": "ptm_bucket",
    "nce_bin": "nce_bin",
}


class Predictor(Protocol):
    """Anything that can produce a canonical vector for (peptide, z, nce)."""

    def predict(
        self, peptide: ModifiedPeptide, charge: int, nce: float
    ) -> CanonicalVector: ...


@dataclass(frozen=True)
class StratRow:
    """Per-stratum aggregate metrics."""

    key: str
    n: int
    median_sa: float
    median_sas: float
    median_pcc: float
    ci_sa: BootstrapCi | None = None


@dataclass(frozen=True)
class StratTable:
    """Aggregates for every non-empty stratum along one axis."""

    axis: str
    rows: tuple[StratRow, ...]


@dataclass(frozen=True)
class DecayRow:
    """Median-metric deltas of one stratum against a baseline stratum."""

    key: str
    delta_sa: float
    delta_pcc: float


@dataclass(frozen=True)
class SweepPoint:
    """One point of an NCE calibration curve."""

    nce: float
    median_sa: float


@dataclass(frozen=True)
class SweepResult:
    """NCE calibration curve and its arg-min (ties to the lowest NCE)."""

    curve: tuple[SweepPoint, ...]
    argmin_nce: float


@dataclass(frozen=True)
class ChargePerturbationSummary:
    """Distribution of SAS between z=2 and forced z=3 predictions."""

    n: int
    median_sas: float
    q25: float
    q75: float
    high_sas_fraction: float
    threshold: float


def _stratum_sort_key(axis: str, key: object):
    if axis == "charge":
        return int(key)
    if axis == "ptm_type":
        return PTM_BUCKETS.index(str(key))
    if axis == "length_bin":
        return int(str(key).split(",")[0].lstrip("["))
    return str(key)


def stratify(
    rows: Sequence[MetricRow],
    axis: str,
    *,
    with_ci: bool = False,
    resamples: int = 1000,
    level: float = 0.95,
    seed: int = 42,
) -> StratTable:
    """Group metric rows along one axis and aggregate per-stratum medians.

    Empty strata are omitted; rows are ordered by the axis's natural
    order (numeric charge, bin lower edge, fixed PTM bucket order).

    Raises:
        EmptyInputError: No rows.
        ValueError: Unknown axis.
    """
    if axis not in STRAT_AXES:
        raise ValueError(f"axis must be one of {STRAT_AXES}")
    if not rows:
        raise EmptyInputError("no metric rows to stratify")
    attr = _AXIS_ATTR[axis]
    groups: dict[object, list[MetricRow]] = {}
    for row in rows:
        groups.setdefault(getattr(row, attr), []).append(row)
    out: list[StratRow] = []
    for key in sorted(groups, key=lambda k: _stratum_sort_key(axis, k)):
        members = groups[key]
        sa_values = [m.sa for m in members]
        ci = bootstrap_ci(sa_values, resamples, level, seed) if with_ci else None
        out.append(
            StratRow(
                key=str(key),
                n=len(members),
                median_sa=float(np.median(sa_values)),
                median_sas=float(np.median([m.sas for m in members])),
                median_pcc=float(np.median([m.pcc for m in members])),
                ci_sa=ci,
            )
        )
    return StratTable(axis=axis, rows=tuple(out))


def delta_decay(table: StratTable, baseline_bin: str = "[6,10)") -> tuple[DecayRow, ...]:
    """Median-metric deltas of every stratum against a baseline stratum.

    Raises:
        MissingBaselineBinError: The baseline stratum is absent.
    """
    base = next((row for row in table.rows if row.key == baseline_bin), None)
    if base is None:
        raise MissingBaselineBinError(
            f"baseline stratum {baseline_bin!r} not present in table"
        )
    return tuple(
        DecayRow(
            key=row.key,
            delta_sa=row.median_sa - base.median_sa,
            delta_pcc=row.median_pcc - base.median_pcc,
        )
        for row in table.rows
    )


def _median_sa(
    predictor: Predictor,
    eval_rows: Sequence[tuple[SpectrumRecord, CanonicalVector]],
    nce_override: float | None,
    convention: str,
) -> float:
    values = []
    for record, truth in eval_rows:
        nce = record.collision_energy if nce_override is None else nce_override
        pred = predictor.predict(record.peptide, record.precursor_charge, nce)
        values.append(spectral_angle(pred, truth, convention))
    return float(np.median(values))


def nce_calibration_sweep(
    predictor: Predictor,
    eval_rows: Sequence[tuple[SpectrumRecord, CanonicalVector]],
    nce_grid: Sequence[float],
    convention: str = "1/pi",
) -> SweepResult:
    """Median SA versus overridden inference NCE over a grid.

    Every record's NCE is overridden at inference while the ground truth
    stays fixed. The arg-min breaks ties toward the lowest NCE.

    Raises:
        EmptyInputError: Empty grid or evaluation set.
    """
    if not nce_grid or not eval_rows:
        raise EmptyInputError("calibration sweep needs a grid and evaluation rows")
    curve = tuple(
        SweepPoint(nce=float(nce), median_sa=_median_sa(predictor, eval_rows, float(nce), convention))
        for nce in nce_grid
    )
    best = min(curve, key=lambda point: (point.median_sa, point.nce))
    return SweepResult(curve=curve, argmin_nce=best.nce)


def blind_nce_shift(
    predictor: Predictor,
    eval_rows: Sequence[tuple[SpectrumRecord, CanonicalVector]],
    nce_from: float = 25.0,
    nce_to: float = 30.0,
    convention: str = "1/pi",
) -> float:
    """Median SA at an overridden NCE ``nce_to`` minus median SA at ``nce_from``.

    An NCE-insensitive predictor yields exactly 0.

    Raises:
        EmptyInputError: Empty evaluation set.
    """
    if not eval_rows:
        raise EmptyInputError("NCE shift needs evaluation rows")
    after = _median_sa(predictor, eval_rows, nce_to, convention)
    before = _median_sa(predictor, eval_rows, nce_from, convention)
    return after - before


def charge_perturbation_values(
    predictor: Predictor,
    records: Iterable[SpectrumRecord],
    convention: str = "1/pi",
) -> np.ndarray:
    """Per-record SAS between z=2 and forced z=3 predictions.

    Both predictions are compared on the z=2 mask so the comparison space
    is identical.

    Raises:
        EmptyInputError: No z=2 records.
    """
    z2_records = [r for r in records if r.precursor_charge == 2]
    if not z2_records:
        raise EmptyInputError("charge perturbation needs z=2 records")
    sas_values = np.empty(len(z2_records))
    for i, record in enumerate(z2_records):
        at_z2 = predictor.predict(record.peptide, 2, record.collision_energy)
        at_z3 = predictor.predict(record.peptide, 3, record.collision_energy)
        remasked = make_canonical_vector(at_z3.values, at_z2.mask)
        sas_values[i] = 1.0 - spectral_angle(at_z2, remasked, convention)
    return sas_values


def summarize_charge_perturbation(
    sas_values: np.ndarray, threshold: float = 0.90
) -> ChargePerturbationSummary:
    """Quartile summary of charge-perturbation SAS values.

    ``high_sas_fraction`` counts SAS strictly greater than the threshold.

    Raises:
        EmptyInputError: Empty value array.
    """
    if sas_values.size == 0:
        raise EmptyInputError("no charge-perturbation values to summarize")
    q25, median, q75 = np.percentile(sas_values, [25.0, 50.0, 75.0], method="linear")
    return ChargePerturbationSummary(
        n=int(sas_values.size),
        median_sas=float(median),
        q25=float(q25),
        q75=float(q75),
        high_sas_fraction=float((sas_values > threshold).mean()),
        threshold=threshold,
    )


def charge_perturbation(
    predictor: Predictor,
    records: Iterable[SpectrumRecord],
    *,
    threshold: float = 0.90,
    convention: str = "1/pi",
) -> ChargePerturbationSummary:
    """SAS between z=2 and forced z=3 predictions of the same peptides.

    A predictor that ignores charge scores exactly 1.0.

    Raises:
        EmptyInputError: No z=2 records.
    """
    values = charge_perturbation_values(predictor, records, convention)
    return summarize_charge_perturbation(values, threshold)
