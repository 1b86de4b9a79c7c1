"""Physical constants and canonical-space dimensions.

Monoisotopic masses are assembled from CODATA/AME atomic masses so that a
40-residue peptide built from them stays consistent to well below 1e-6 Da.
All masses are in daltons.
"""

from __future__ import annotations

# Atomic monoisotopic masses (Da).
MASS_H = 1.00782503207
MASS_C = 12.0
MASS_N = 14.0030740048
MASS_O = 15.9949146221
MASS_S = 31.9720711744

#: Mass of a proton (Da); the charge carrier added per charge state.
PROTON_MASS = 1.00727646688

#: Mass of one water molecule (Da); the peptide-bond condensation loss.
WATER_MASS = 2 * MASS_H + MASS_O

#: Monoisotopic residue masses (Da) for the 20 canonical amino acids,
#: computed from elemental composition of each residue (amino acid - water).
RESIDUE_MASSES: dict[str, float] = {
    "A": 3 * MASS_C + 5 * MASS_H + 1 * MASS_N + 1 * MASS_O,
    "C": 3 * MASS_C + 5 * MASS_H + 1 * MASS_N + 1 * MASS_O + 1 * MASS_S,
    "D": 4 * MASS_C + 5 * MASS_H + 1 * MASS_N + 3 * MASS_O,
    "E": 5 * MASS_C + 7 * MASS_H + 1 * MASS_N + 3 * MASS_O,
    "F": 9 * MASS_C + 9 * MASS_H + 1 * MASS_N + 1 * MASS_O,
    "G": 2 * MASS_C + 3 * MASS_H + 1 * MASS_N + 1 * MASS_O,
    "H": 6 * MASS_C + 7 * MASS_H + 3 * MASS_N + 1 * MASS_O,
    "I": 6 * MASS_C + 11 * MASS_H + 1 * MASS_N + 1 * MASS_O,
    "K": 6 * MASS_C + 12 * MASS_H + 2 * MASS_N + 1 * MASS_O,
    "L": 6 * MASS_C + 11 * MASS_H + 1 * MASS_N + 1 * MASS_O,
    "M": 5 * MASS_C + 9 * MASS_H + 1 * MASS_N + 1 * MASS_O + 1 * MASS_S,
    "N": 4 * MASS_C + 6 * MASS_H + 2 * MASS_N + 2 * MASS_O,
    "P": 5 * MASS_C + 7 * MASS_H + 1 * MASS_N + 1 * MASS_O,
    "Q": 5 * MASS_C + 8 * MASS_H + 2 * MASS_N + 2 * MASS_O,
    "R": 6 * MASS_C + 12 * MASS_H + 4 * MASS_N + 1 * MASS_O,
    "S": 3 * MASS_C + 5 * MASS_H + 1 * MASS_N + 2 * MASS_O,
    "T": 4 * MASS_C + 7 * MASS_H + 1 * MASS_N + 2 * MASS_O,
    "V": 5 * MASS_C + 9 * MASS_H + 1 * MASS_N + 1 * MASS_O,
    "W": 11 * MASS_C + 10 * MASS_H + 2 * MASS_N + 1 * MASS_O,
    "Y": 9 * MASS_C + 9 * MASS_H + 1 * MASS_N + 2 * MASS_O,
}

#: Supported modifications: UNIMOD accession -> (name, monoisotopic delta Da).
SUPPORTED_MODS: dict[int, tuple[str, float]] = {
    1: ("Acetyl", 2 * MASS_C + 2 * MASS_H + 1 * MASS_O),
    4: ("Carbamidomethyl", 2 * MASS_C + 3 * MASS_H + 1 * MASS_N + 1 * MASS_O),
    35: ("Oxidation", MASS_O),
}

# Canonical ion-space dimensions.
#: Reference peptide length the index layout is sized for.
REFERENCE_LENGTH = 40
#: Highest fragment charge state the layout carries.
MAX_FRAGMENT_CHARGE = 3
#: Number of ion series in the layout (b and y).
N_SERIES = 2
#: Total canonical vector dimension: 39 positions x 2 series x 3 charges.
CANONICAL_DIM = (REFERENCE_LENGTH - 1) * N_SERIES * MAX_FRAGMENT_CHARGE

# Binned m/z axis used when projecting observed spectra.
#: Bin width in Da.
BIN_WIDTH = 0.1
#: Upper edge of the m/z axis in Da.
MZ_MAX = 2000.0
#: Number of bins covering [0, MZ_MAX).
N_BINS = 20000

# Supported precursor envelope.
MIN_PEPTIDE_LENGTH = 6
MAX_PEPTIDE_LENGTH = 40
MIN_PRECURSOR_CHARGE = 1
MAX_PRECURSOR_CHARGE = 6

# Quality gates applied only when the corresponding columns are present.
MIN_ANDROMEDA_SCORE = 70.0
MAX_MASS_ERROR_PPM = 20.0

#: Collision energy assumed when a table carries no such column.
DEFAULT_COLLISION_ENERGY = 25.0
