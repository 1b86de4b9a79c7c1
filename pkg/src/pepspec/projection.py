"""Projection of spectra and model outputs into the canonical ion space.

Experimental spectra are binned onto a fixed 0.1 Da grid over 0-2000 Da
(20,000 bins, nearest bin by round); intensities at the theoretical b/y
ion bins are then extracted into the 234-dimensional canonical vector.
Model outputs arrive either as native ion tensors with a declared layout
or as sparse (ion, intensity) entries. Every projection clamps negative
values to zero, zeroes masked-out positions, and normalizes the base
peak to 1 when any masked-in intensity is positive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .constants import BIN_WIDTH, N_BINS
from .errors import EmptyMaskError, LayoutMismatchError, SchemaError
from .ions import (
    DEFAULT_SPACE,
    CanonicalSpace,
    IonId,
    canonical_index,
    theoretical_mz,
    valid_mask,
)
from .peptide import ModifiedPeptide

logger = logging.getLogger(__name__)

_AXES = ("position", "ion_type", "charge")


@dataclass(frozen=True)
class RawSpectrum:
    """An observed peak list: parallel m/z and intensity tuples."""

    mz: tuple[float, ...]
    intensity: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.mz) != len(self.intensity):
            raise SchemaError(
                f"{len(self.mz)} m/z values but {len(self.intensity)} intensities"
            )
        if any(v < 0 for v in self.intensity):
            raise SchemaError("negative peak intensity")


@dataclass(frozen=True, eq=False)
class CanonicalVector:
    """Non-negative intensities over the canonical ion space plus a mask.

    Invariants (enforced by every constructor in this module): values at
    masked-out positions are exactly 0; when any masked-in value is
    positive the maximum masked-in value is exactly 1.
    """

    values: np.ndarray
    mask: np.ndarray

    @property
    def k(self) -> int:
        """Number of masked-in positions."""
        return int(self.mask.sum())


@dataclass(frozen=True)
class LayoutDescriptor:
    """How a model's native ion tensor maps onto IonIds.

    Attributes:
        model_l_ref: Reference length of the native layout.
        model_z_max: Fragment-charge cap of the native layout.
        axis_order: Permutation of ("position", "ion_type", "charge")
            giving the native tensor's axis meaning (flat inputs are
            reshaped in this order, C-style).
        ion_order: ("b", "y") or ("y", "b") along the ion-type axis.
        charge_ascending: Whether the charge axis runs 1..model_z_max.
    """

    model_l_ref: int = 40
    model_z_max: int = 3
    axis_order: tuple[str, str, str] = _AXES
    ion_order: tuple[str, str] = ("b", "y")
    charge_ascending: bool = True

    def __post_init__(self) -> None:
        if sorted(self.axis_order) != sorted(_AXES):
            raise LayoutMismatchError(f"axis_order {self.axis_order!r} is not a permutation of {_AXES!r}")
        if sorted(self.ion_order) != ["b", "y"]:
            raise LayoutMismatchError(f"ion_order {self.ion_order!r} must contain b and y")
        if self.model_l_ref < 2 or self.model_z_max < 1:
            raise LayoutMismatchError(
                f"invalid native layout (l_ref={self.model_l_ref}, z_max={self.model_z_max})"
            )


def make_canonical_vector(
    values: np.ndarray | Sequence[float],
    mask: np.ndarray,
    *,
    require_nonempty: bool = True,
) -> CanonicalVector:
    """Build a CanonicalVector, enforcing its invariants.

    Clamps negative values to 0, zeroes masked-out positions, and divides
    by the base peak when positive. Inputs are copied; the stored arrays
    are read-only.

    Raises:
        LayoutMismatchError: values and mask differ in shape.
        EmptyMaskError: mask has no true bits (when require_nonempty).
    """
    out = np.array(values, dtype=float, copy=True)
    mask_arr = np.array(mask, dtype=bool, copy=True)
    if out.shape != mask_arr.shape or out.ndim != 1:
        raise LayoutMismatchError(
            f"values shape {out.shape} does not match mask shape {mask_arr.shape}"
        )
    if require_nonempty and not mask_arr.any():
        raise EmptyMaskError("mask has no valid positions")
    np.clip(out, 0.0, None, out=out)
    out[~mask_arr] = 0.0
    peak = out.max() if out.size else 0.0
    if peak > 0.0:
        out /= peak
    out.setflags(write=False)
    mask_arr.setflags(write=False)
    return CanonicalVector(values=out, mask=mask_arr)


def bin_spectrum(spectrum: RawSpectrum) -> np.ndarray:
    """Bin a peak list onto the fixed 0.1 Da grid.

    Each peak lands in bin round(mz / 0.1) (ties round half to even).
    Peaks mapping outside [0, 19999] are dropped; peaks sharing a bin
    keep the maximum intensity.
    """
    bins = np.zeros(N_BINS)
    if not spectrum.mz:
        return bins
    mz = np.asarray(spectrum.mz, dtype=float)
    intensity = np.asarray(spectrum.intensity, dtype=float)
    index = np.round(mz / BIN_WIDTH).astype(np.int64)
    keep = (index >= 0) & (index < N_BINS)
    np.maximum.at(bins, index[keep], intensity[keep])
    return bins


def theoretical_bins(
    peptide: ModifiedPeptide, charge: int, space: CanonicalSpace = DEFAULT_SPACE
) -> tuple[np.ndarray, np.ndarray]:
    """Canonical indices of masked-in ions and their 0.1 Da bin indices."""
    indices, mz = theoretical_mz(peptide, charge, space)
    bins = np.round(mz / BIN_WIDTH).astype(np.int64)
    return indices, bins


def project_full_spectrum(
    bins: np.ndarray,
    peptide: ModifiedPeptide,
    charge: int,
    space: CanonicalSpace = DEFAULT_SPACE,
) -> CanonicalVector:
    """Extract theoretical-ion bins from a 20,000-bin spectrum.

    When two theoretical ions share a bin both read the shared value.

    Raises:
        LayoutMismatchError: bins is not a length-20,000 vector.
        EmptyMaskError: the peptide/charge mask is empty.
    """
    bin_arr = np.asarray(bins, dtype=float)
    if bin_arr.shape != (N_BINS,):
        raise LayoutMismatchError(f"expected {N_BINS} bins, got shape {bin_arr.shape}")
    indices, ion_bins = theoretical_bins(peptide, charge, space)
    values = np.zeros(space.dim)
    in_axis = (ion_bins >= 0) & (ion_bins < N_BINS)
    values[indices[in_axis]] = bin_arr[ion_bins[in_axis]]
    return make_canonical_vector(values, valid_mask(peptide, charge, space))


def project_ground_truth(
    spectrum: RawSpectrum,
    peptide: ModifiedPeptide,
    charge: int,
    space: CanonicalSpace = DEFAULT_SPACE,
) -> CanonicalVector:
    """Project an observed spectrum to its canonical ground-truth vector.

    Defined as the exact composition project_full_spectrum(bin_spectrum(s)).
    """
    return project_full_spectrum(bin_spectrum(spectrum), peptide, charge, space)


def project_sparse_entries(
    entries: Iterable[tuple[IonId, float]],
    peptide: ModifiedPeptide,
    charge: int,
    space: CanonicalSpace = DEFAULT_SPACE,
) -> CanonicalVector:
    """Scatter sparse (IonId, intensity) entries into a canonical vector.

    Unmentioned positions are zero; duplicate IonIds keep the last write.

    Raises:
        OutOfBoundsError: an IonId outside the space.
    """
    values = np.zeros(space.dim)
    for ion, intensity in entries:
        values[canonical_index(ion, space)] = intensity
    return make_canonical_vector(values, valid_mask(peptide, charge, space))


def project_ion_tensor(
    native: np.ndarray | Sequence[float],
    layout: LayoutDescriptor,
    peptide: ModifiedPeptide,
    charge: int,
    space: CanonicalSpace = DEFAULT_SPACE,
) -> CanonicalVector:
    """Remap a model's native ion tensor into the canonical space.

    The native tensor is reshaped/permuted per the layout, truncated or
    zero-padded to the canonical dimensions, then clamped, masked, and
    normalized.

    Raises:
        LayoutMismatchError: tensor size inconsistent with the layout.
    """
    sizes = {
        "position": layout.model_l_ref - 1,
        "ion_type": 2,
        "charge": layout.model_z_max,
    }
    expected = tuple(sizes[axis] for axis in layout.axis_order)
    arr = np.asarray(native, dtype=float)
    if arr.ndim == 1:
        total = int(np.prod(expected))
        if arr.size != total:
            raise LayoutMismatchError(
                f"flat tensor of size {arr.size} does not match layout size {total}"
            )
        arr = arr.reshape(expected)
    elif arr.shape != expected:
        raise LayoutMismatchError(
            f"tensor shape {arr.shape} does not match layout shape {expected}"
        )
    perm = tuple(layout.axis_order.index(axis) for axis in _AXES)
    arr = arr.transpose(perm)
    if layout.ion_order == ("y", "b"):
        arr = arr[:, ::-1, :]
    if not layout.charge_ascending:
        arr = arr[:, :, ::-1]
    values = np.zeros(space.dim)
    grid = values.reshape(space.l_ref - 1, 2, space.z_frag_max)
    n_pos = min(layout.model_l_ref, space.l_ref) - 1
    n_charge = min(layout.model_z_max, space.z_frag_max)
    grid[:n_pos, :, :n_charge] = arr[:n_pos, :, :n_charge]
    return make_canonical_vector(values, valid_mask(peptide, charge, space))
