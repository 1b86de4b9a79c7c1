"""Masked spectral metrics: SA, SAS, PCC, medians, and bootstrap CIs.

The spectral angle between two non-negative masked vectors is
arccos(cosine) / pi (default convention; a 2/pi variant is available).
It is computed in the algebraically equivalent form
2 * atan2(||a_hat - b_hat||, ||a_hat + b_hat||) which is exact at the
identity (SA(v, v) == 0) and at orthogonal supports (SA == 0.5), where
the clamped-arccos form loses a few ulps. SAS is 1 - SA exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import (
    DEFAULT_LENGTH_EDGES,
    DEFAULT_NCE_BIN_WIDTH,
    SA_CONVENTIONS,
    length_bin_label,
    nce_bin_label,
)
from .errors import EmptyInputError, EmptyMaskError, MaskMismatchError, ScopeViolationError
from .peptide import SpectrumRecord, ptm_metadata, scope_filter, to_canonical_string
from .projection import CanonicalVector

logger = logging.getLogger(__name__)

#: Standard deviations below this are treated as zero variance in PCC.
PCC_STD_FLOOR = 1e-8

#: Number of bootstrap resamples drawn per vectorized block.
_BOOTSTRAP_CHUNK = 64


@dataclass(frozen=True)
class MetricRow:
    """Per-spectrum metric values plus stratification keys."""

    sa: float
    sas: float
    pcc: float
    k: int
    length_bin: str
    charge: int
    ptm_bucket: str
    nce_bin: str
    sequence: str | None = None
    collision_energy: float | None = None
    raw_file: str | None = None


@dataclass(frozen=True)
class BootstrapCi:
    """Percentile bootstrap confidence interval of a median."""

    lo: float
    hi: float
    resamples: int
    level: float


def _masked_pair(
    pred: CanonicalVector, truth: CanonicalVector, *, require_nonempty: bool
) -> tuple[np.ndarray, np.ndarray]:
    if pred.mask.shape != truth.mask.shape or not np.array_equal(pred.mask, truth.mask):
        raise MaskMismatchError("prediction and truth were scored under different masks")
    if require_nonempty and not pred.mask.any():
        raise EmptyMaskError("mask has no valid positions")
    return pred.values[pred.mask], truth.values[truth.mask]


def spectral_angle(
    pred: CanonicalVector, truth: CanonicalVector, convention: str = "1/pi"
) -> float:
    """Spectral angle over masked positions.

    Under the default 1/pi convention the value lies in [0, 0.5] for
    non-negative vectors; under 2/pi it lies in [0, 1]. When exactly one
    masked vector is all-zero the maximal value is returned; when both
    are all-zero the angle is 0.

    Raises:
        MaskMismatchError: The two masks differ.
        EmptyMaskError: The shared mask is empty.
    """
    if convention not in SA_CONVENTIONS:
        raise ValueError(f"convention must be one of {SA_CONVENTIONS}")
    a, b = _masked_pair(pred, truth, require_nonempty=True)
    scale = 1.0 if convention == "1/pi" else 2.0
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 and norm_b == 0.0:
        return 0.0
    if norm_a == 0.0 or norm_b == 0.0:
        return scale * 0.5
    a_hat = a / norm_a
    b_hat = b / norm_b
    angle = 2.0 * math.atan2(
        float(np.linalg.norm(a_hat - b_hat)), float(np.linalg.norm(a_hat + b_hat))
    )
    return scale * angle / math.pi


def spectral_angle_similarity(
    pred: CanonicalVector, truth: CanonicalVector, convention: str = "1/pi"
) -> float:
    """SAS = 1 - SA, exactly."""
    return 1.0 - spectral_angle(pred, truth, convention)


def pcc(pred: CanonicalVector, truth: CanonicalVector) -> float:
    """Pearson correlation over masked positions.

    Returns 0.0 (never NaN) when fewer than two masked positions exist
    or either side's standard deviation falls below 1e-8.

    Raises:
        MaskMismatchError: The two masks differ.
    """
    a, b = _masked_pair(pred, truth, require_nonempty=False)
    if a.size < 2:
        return 0.0
    if float(np.std(a)) < PCC_STD_FLOOR or float(np.std(b)) < PCC_STD_FLOOR:
        return 0.0
    r = float(np.corrcoef(a, b)[0, 1])
    return float(min(1.0, max(-1.0, r)))


def evaluate_pair(
    record: SpectrumRecord,
    pred: CanonicalVector,
    truth: CanonicalVector,
    *,
    convention: str = "1/pi",
    length_edges: tuple[int, ...] = DEFAULT_LENGTH_EDGES,
    nce_bin_width: float = DEFAULT_NCE_BIN_WIDTH,
) -> MetricRow:
    """Score one prediction/truth pair and attach stratification keys.

    Raises:
        ScopeViolationError: The record is outside the supported envelope.
        MaskMismatchError, EmptyMaskError: Propagated from the metrics.
    """
    if not scope_filter(record):
        raise ScopeViolationError(
            f"record (L={record.peptide.length}, z={record.precursor_charge}) "
            "is outside the supported scope"
        )
    sa = spectral_angle(pred, truth, convention)
    _, bucket = ptm_metadata(record.peptide)
    return MetricRow(
        sa=sa,
        sas=1.0 - sa,
        pcc=pcc(pred, truth),
        k=int(pred.mask.sum()),
        length_bin=length_bin_label(record.peptide.length, length_edges),
        charge=record.precursor_charge,
        ptm_bucket=bucket,
        nce_bin=nce_bin_label(record.collision_energy, nce_bin_width),
        sequence=to_canonical_string(record.peptide),
        collision_energy=record.collision_energy,
        raw_file=record.raw_file,
    )


def aggregate_median(rows: Sequence[MetricRow], key: str = "sa") -> float:
    """Median of one metric over rows (mean of the middle two when even).

    Raises:
        EmptyInputError: No rows.
    """
    if not rows:
        raise EmptyInputError("no metric rows to aggregate")
    return float(np.median([getattr(row, key) for row in rows]))


def bootstrap_ci(
    values: Iterable[float],
    resamples: int = 1000,
    level: float = 0.95,
    seed: int = 42,
) -> BootstrapCi:
    """Percentile bootstrap CI of the median.

    Resampling uses numpy's Philox generator, a counter-based PRNG with
    platform-stable streams, so identical inputs and seed give identical
    intervals. Input order does not matter: values are sorted first.

    Raises:
        EmptyInputError: No values.
    """
    arr = np.sort(np.asarray(list(values), dtype=float))
    if arr.size == 0:
        raise EmptyInputError("no values to bootstrap")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    rng = np.random.Generator(np.random.Philox(seed))
    medians = np.empty(resamples)
    for start in range(0, resamples, _BOOTSTRAP_CHUNK):
        count = min(_BOOTSTRAP_CHUNK, resamples - start)
        draws = rng.integers(0, arr.size, size=(count, arr.size))
        medians[start : start + count] = np.median(arr[draws], axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(medians, [100.0 * alpha, 100.0 * (1.0 - alpha)], method="linear")
    return BootstrapCi(lo=float(lo), hi=float(hi), resamples=resamples, level=level)
