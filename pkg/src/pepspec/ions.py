"""Canonical ion space: b/y fragment identities, indices, masses, and masks.

The shared ion space enumerates (cleavage position, ion type, fragment
charge) triples into a fixed vector layout. With the default reference
length 40 and fragment-charge cap 3 the space has 39 x 2 x 3 = 234
dimensions. The layout is position-major, b before y, fragment charge
ascending; every other module depends on this single definition.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .constants import (
    MAX_FRAGMENT_CHARGE,
    N_SERIES,
    PROTON_MASS,
    REFERENCE_LENGTH,
    WATER_MASS,
)
from .errors import OutOfBoundsError, PositionBeyondPeptideError
from .peptide import ModifiedPeptide, nterm_mass_delta, residue_prefix_masses

logger = logging.getLogger(__name__)

#: Ion series carried by the canonical space, in layout order.
ION_TYPES = ("b", "y")


@dataclass(frozen=True)
class CanonicalSpace:
    """Dimensions of the shared canonical ion space.

    Attributes:
        l_ref: Reference peptide length the layout is sized for.
        z_frag_max: Highest fragment charge carried by the layout.
    """

    l_ref: int = REFERENCE_LENGTH
    z_frag_max: int = MAX_FRAGMENT_CHARGE

    def __post_init__(self) -> None:
        if self.l_ref < 2 or self.z_frag_max < 1:
            raise OutOfBoundsError(
                f"invalid canonical space (l_ref={self.l_ref}, z_frag_max={self.z_frag_max})"
            )

    @property
    def dim(self) -> int:
        """Total vector dimension: (l_ref - 1) x 2 x z_frag_max."""
        return (self.l_ref - 1) * N_SERIES * self.z_frag_max


#: The default 234-dimensional space used throughout.
DEFAULT_SPACE = CanonicalSpace()


@dataclass(frozen=True, order=True)
class IonId:
    """One fragment-ion identity: cleavage position, series, charge.

    Ordering of IonId tuples coincides with canonical index order.
    """

    position: int
    ion_type: str
    frag_charge: int


def canonical_index(ion: IonId, space: CanonicalSpace = DEFAULT_SPACE) -> int:
    """Map an IonId to its flat index in the canonical layout.

    The layout is position-major, b before y, fragment charge ascending:
    index = (p - 1) * 2 * z_frag_max + t * z_frag_max + (z_f - 1) with
    t = 0 for b ions and t = 1 for y ions. The map is a bijection onto
    [0, dim - 1].

    Raises:
        OutOfBoundsError: Any component outside the owning space.
    """
    if ion.ion_type not in ION_TYPES:
        raise OutOfBoundsError(f"unknown ion type {ion.ion_type!r}")
    if not 1 <= ion.position <= space.l_ref - 1:
        raise OutOfBoundsError(
            f"position {ion.position} outside [1, {space.l_ref - 1}]"
        )
    if not 1 <= ion.frag_charge <= space.z_frag_max:
        raise OutOfBoundsError(
            f"fragment charge {ion.frag_charge} outside [1, {space.z_frag_max}]"
        )
    series = ION_TYPES.index(ion.ion_type)
    return (
        (ion.position - 1) * N_SERIES * space.z_frag_max
        + series * space.z_frag_max
        + (ion.frag_charge - 1)
    )


def ion_from_index(index: int, space: CanonicalSpace = DEFAULT_SPACE) -> IonId:
    """Inverse of canonical_index.

    Raises:
        OutOfBoundsError: Index outside [0, dim - 1].
    """
    if not 0 <= index < space.dim:
        raise OutOfBoundsError(f"index {index} outside [0, {space.dim - 1}]")
    per_position = N_SERIES * space.z_frag_max
    position = index // per_position + 1
    remainder = index % per_position
    series = remainder // space.z_frag_max
    frag_charge = remainder % space.z_frag_max + 1
    return IonId(position=position, ion_type=ION_TYPES[series], frag_charge=frag_charge)


def ion_mz(peptide: ModifiedPeptide, ion: IonId) -> float:
    """Theoretical m/z of one b or y fragment ion.

    b ions sum residue and site-modification masses over positions 1..p
    plus the N-terminal modification; y ions sum positions p+1..L plus
    water. Both add z_f proton masses and divide by z_f. The y-side sum
    is computed as total minus prefix so scalar and vectorized paths
    agree bit for bit.

    Raises:
        PositionBeyondPeptideError: Cleavage position past L - 1.
        OutOfBoundsError: Non-positive fragment charge or unknown series.
    """
    if ion.ion_type not in ION_TYPES:
        raise OutOfBoundsError(f"unknown ion type {ion.ion_type!r}")
    if ion.frag_charge < 1:
        raise OutOfBoundsError(f"fragment charge {ion.frag_charge} must be >= 1")
    if not 1 <= ion.position <= peptide.length - 1:
        raise PositionBeyondPeptideError(
            f"cleavage position {ion.position} beyond peptide of length {peptide.length}"
        )
    prefix = residue_prefix_masses(peptide)
    if ion.ion_type == "b":
        neutral = prefix[ion.position] + nterm_mass_delta(peptide)
    else:
        neutral = (prefix[peptide.length] - prefix[ion.position]) + WATER_MASS
    return float((neutral + ion.frag_charge * PROTON_MASS) / ion.frag_charge)


def mask_for_length(
    length: int, charge: int, space: CanonicalSpace = DEFAULT_SPACE
) -> np.ndarray:
    """Validity mask for a peptide of a given length and precursor charge.

    A bit is true iff its cleavage position is <= length - 1 and its
    fragment charge is <= min(charge, z_frag_max). Precursor charges
    equal to the fragment charge are allowed; only z_f > z is excluded.
    """
    mask = np.zeros(space.dim, dtype=bool)
    z_cap = min(charge, space.z_frag_max)
    if z_cap < 1:
        return mask
    per_position = N_SERIES * space.z_frag_max
    for position in range(1, min(length - 1, space.l_ref - 1) + 1):
        base = (position - 1) * per_position
        for series in range(N_SERIES):
            start = base + series * space.z_frag_max
            mask[start : start + z_cap] = True
    return mask


def valid_mask(
    peptide: ModifiedPeptide, charge: int, space: CanonicalSpace = DEFAULT_SPACE
) -> np.ndarray:
    """Validity mask for a peptide under a precursor charge."""
    return mask_for_length(peptide.length, charge, space)


def theoretical_mz(
    peptide: ModifiedPeptide, charge: int, space: CanonicalSpace = DEFAULT_SPACE
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized theoretical m/z for every masked-in ion.

    Returns:
        ``(indices, mz)``: ascending canonical indices of the masked-in
        ions and their m/z values; arithmetic matches ion_mz exactly.
    """
    mask = mask_for_length(peptide.length, charge, space)
    indices = np.flatnonzero(mask)
    if indices.size == 0:
        return indices, np.zeros(0)
    per_position = N_SERIES * space.z_frag_max
    positions = indices // per_position + 1
    remainder = indices % per_position
    series = remainder // space.z_frag_max
    frag_charge = remainder % space.z_frag_max + 1
    prefix = residue_prefix_masses(peptide)
    total = prefix[peptide.length]
    b_neutral = prefix[positions] + nterm_mass_delta(peptide)
    y_neutral = (total - prefix[positions]) + WATER_MASS
    neutral = np.where(series == 0, b_neutral, y_neutral)
    mz = (neutral + frag_charge * PROTON_MASS) / frag_charge
    return indices, mz


def enumerate_ions(
    peptide: ModifiedPeptide, charge: int, space: CanonicalSpace = DEFAULT_SPACE
) -> list[tuple[IonId, float]]:
    """All masked-in ions with their theoretical m/z, in canonical index order.

    The entry count always equals the popcount of valid_mask.
    """
    indices, mz = theoretical_mz(peptide, charge, space)
    return [
        (ion_from_index(int(i), space), float(m)) for i, m in zip(indices, mz)
    ]
