"""Parsing, normalization, and mass math for modified peptide sequences.

String grammar: uppercase one-letter residue codes, with an optional
modification token in square or round brackets placed immediately after
the residue it decorates, or before the first residue for an N-terminal
modification (an optional ``-`` may follow the N-terminal token). Tokens
are either canonical ``UNIMOD:<id>`` accessions or one of the documented
aliases. Only three modifications are supported: UNIMOD 1 (N-terminal
acetyl), UNIMOD 4 (carbamidomethyl on C), and UNIMOD 35 (oxidation on M).
Anything else is rejected rather than guessed.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from .constants import (
    MAX_MASS_ERROR_PPM,
    MAX_PEPTIDE_LENGTH,
    MAX_PRECURSOR_CHARGE,
    MIN_ANDROMEDA_SCORE,
    MIN_PEPTIDE_LENGTH,
    MIN_PRECURSOR_CHARGE,
    RESIDUE_MASSES,
    SUPPORTED_MODS,
    WATER_MASS,
)
from .errors import (
    MalformedTokenError,
    ScopeViolationError,
    SchemaError,
    UnknownResidueError,
    UnsupportedModificationError,
)

logger = logging.getLogger(__name__)

#: Maximum residue count accepted by the parser (benchmark scope is tighter).
PARSE_MAX_LENGTH = 100

#: PTM summary buckets, in the canonical reporting order.
PTM_BUCKETS = ("Unmod", "Ox", "Cam", "Ace")

#: Residue (or N-terminus) each supported modification may attach to.
MOD_ATTACHMENT: dict[int, str] = {1: "nterm", 4: "C", 35: "M"}

#: Lowercased alias spellings accepted in bracket tokens. This table is an
#: explicit, versioned guess documented in docs/formats.md; spellings not
#: listed here are rejected.
TOKEN_ALIASES: dict[str, int] = {
    "ox": 35,
    "oxidation": 35,
    "cam": 4,
    "carbamidomethyl": 4,
    "ac": 1,
    "acetyl": 1,
    "acetylation": 1,
}

_BRACKETS = {"[": "]", "(": ")"}
_UNIMOD_RE = re.compile(r"unimod\s*:\s*(\d+)", re.IGNORECASE)


@dataclass(frozen=True)
class ModifiedPeptide:
    """A parsed peptide: residue chain plus attached UNIMOD modifications.

    Attributes:
        residues: Ordered one-letter residue codes as a plain string.
        site_mods: Sorted ``(position, unimod_id)`` pairs, positions 1-based.
        nterm_mod: UNIMOD id of the N-terminal modification, if any.
    """

    residues: str
    site_mods: tuple[tuple[int, int], ...] = ()
    nterm_mod: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= len(self.residues) <= PARSE_MAX_LENGTH:
            raise ScopeViolationError(
                f"peptide length {len(self.residues)} outside [1, {PARSE_MAX_LENGTH}]"
            )
        for ch in self.residues:
            if ch not in RESIDUE_MASSES:
                raise UnknownResidueError(f"unknown residue {ch!r}")
        seen: set[int] = set()
        for pos, unimod_id in self.site_mods:
            if not 1 <= pos <= len(self.residues):
                raise MalformedTokenError(f"modification position {pos} outside peptide")
            if pos in seen:
                raise MalformedTokenError(f"residue {pos} carries two modifications")
            seen.add(pos)
            _check_attachment(unimod_id, self.residues[pos - 1])
        if self.nterm_mod is not None:
            _check_attachment(self.nterm_mod, None)
        if tuple(sorted(self.site_mods)) != self.site_mods:
            object.__setattr__(self, "site_mods", tuple(sorted(self.site_mods)))

    @property
    def length(self) -> int:
        return len(self.residues)

    def site_mod_map(self) -> dict[int, int]:
        """Return site modifications as a position -> UNIMOD id mapping."""
        return dict(self.site_mods)


@dataclass(frozen=True)
class SpectrumRecord:
    """One row of a spectral table.

    Attributes:
        peptide: The parsed modified peptide.
        precursor_charge: Precursor charge state z.
        collision_energy: Normalized collision energy for the scan.
        mz: Peak m/z values in Da (may be empty for peak-free tables).
        intensity: Peak intensities, parallel to ``mz``.
        raw_file: Originating raw file name, when the table carries one.
        andromeda_score: Search-engine score, when present.
        mass_error_ppm: Precursor mass error in ppm, when present.
        split: Pre-assigned split label, when present.
        sample_key: Pre-computed sampling key column, when present.
    """

    peptide: ModifiedPeptide
    precursor_charge: int
    collision_energy: float
    mz: tuple[float, ...] = ()
    intensity: tuple[float, ...] = ()
    raw_file: str | None = None
    andromeda_score: float | None = None
    mass_error_ppm: float | None = None
    split: str | None = None
    sample_key: str | None = None

    def __post_init__(self) -> None:
        if len(self.mz) != len(self.intensity):
            raise SchemaError(
                f"mz list has {len(self.mz)} entries but intensity list has "
                f"{len(self.intensity)}"
            )


def _check_attachment(unimod_id: int, residue: str | None) -> None:
    """Validate that a modification sits on an allowed attachment site."""
    if unimod_id not in SUPPORTED_MODS:
        raise UnsupportedModificationError(f"UNIMOD:{unimod_id} is not supported")
    rule = MOD_ATTACHMENT[unimod_id]
    if rule == "nterm":
        if residue is not None:
            raise UnsupportedModificationError(
                f"UNIMOD:{unimod_id} is N-terminal only, found on residue {residue!r}"
            )
    elif residue != rule:
        where = "the N-terminus" if residue is None else f"residue {residue!r}"
        raise UnsupportedModificationError(
            f"UNIMOD:{unimod_id} attaches to {rule!r}, found on {where}"
        )


def _resolve_token(token: str) -> int:
    """Map a bracket token body to a whitelisted UNIMOD id."""
    body = token.strip()
    if not body:
        raise MalformedTokenError("empty modification token")
    if any(ch in "[]()" for ch in body):
        raise MalformedTokenError(f"nested brackets in token {token!r}")
    match = _UNIMOD_RE.fullmatch(body)
    if match:
        unimod_id = int(match.group(1))
        if unimod_id not in SUPPORTED_MODS:
            raise UnsupportedModificationError(f"UNIMOD:{unimod_id} is not supported")
        return unimod_id
    alias = TOKEN_ALIASES.get(body.lower())
    if alias is None:
        raise UnsupportedModificationError(f"unrecognized modification token {token!r}")
    return alias


def parse_modified_sequence(text: str) -> ModifiedPeptide:
    """Parse a modified peptide string into a ModifiedPeptide.

    Args:
        text: Sequence such as ``"PEPTIDE"``, ``"C[UNIMOD:4]AK"``,
            ``"M(ox)K"``, or ``"[UNIMOD:1]MAK"``.

    Returns:
        The parsed peptide with normalized modification ids.

    Raises:
        UnknownResidueError: A character outside the 20 canonical residues.
        UnsupportedModificationError: A token naming a non-whitelisted PTM
            or a whitelisted PTM on a disallowed site.
        MalformedTokenError: Structurally broken tokens.
    """
    if not text:
        raise MalformedTokenError("empty sequence string")
    residues: list[str] = []
    site_mods: dict[int, int] = {}
    nterm_mod: int | None = None
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _BRACKETS:
            end = text.find(_BRACKETS[ch], i + 1)
            if end < 0:
                raise MalformedTokenError(f"unclosed {ch!r} token in {text!r}")
            unimod_id = _resolve_token(text[i + 1 : end])
            i = end + 1
            if not residues:
                if nterm_mod is not None:
                    raise MalformedTokenError("two N-terminal modification tokens")
                _check_attachment(unimod_id, None)
                nterm_mod = unimod_id
                if i < n and text[i] == "-":
                    i += 1
                continue
            pos = len(residues)
            if pos in site_mods:
                raise MalformedTokenError(f"residue {pos} carries two modifications")
            _check_attachment(unimod_id, residues[-1])
            site_mods[pos] = unimod_id
            continue
        if ch not in RESIDUE_MASSES:
            raise UnknownResidueError(f"unknown residue {ch!r} in {text!r}")
        residues.append(ch)
        i += 1
    if not residues:
        raise MalformedTokenError(f"no residues in {text!r}")
    return ModifiedPeptide(
        residues="".join(residues),
        site_mods=tuple(sorted(site_mods.items())),
        nterm_mod=nterm_mod,
    )


def to_naked(peptide: ModifiedPeptide) -> str:
    """Return the backbone: residue letters with all PTM annotations stripped."""
    return peptide.residues


def to_canonical_string(peptide: ModifiedPeptide) -> str:
    """Render the canonical round-trippable form with ``[UNIMOD:n]`` tokens.

    The N-terminal modification, when present, is rendered as a leading
    bracket token. ``parse_modified_sequence`` inverts this exactly.
    """
    mods = peptide.site_mod_map()
    parts: list[str] = []
    if peptide.nterm_mod is not None:
        parts.append(f"[UNIMOD:{peptide.nterm_mod}]")
    for pos, residue in enumerate(peptide.residues, start=1):
        parts.append(residue)
        if pos in mods:
            parts.append(f"[UNIMOD:{mods[pos]}]")
    return "".join(parts)


def ptm_metadata(peptide: ModifiedPeptide) -> tuple[bool, str]:
    """Return ``(has_ptm, bucket)`` for a peptide.

    The bucket is one of ``PTM_BUCKETS``; peptides carrying several distinct
    modification types collapse by the fixed priority Ace > Cam > Ox.
    """
    ids = {unimod_id for _, unimod_id in peptide.site_mods}
    if peptide.nterm_mod is not None:
        ids.add(peptide.nterm_mod)
    if not ids:
        return False, "Unmod"
    if 1 in ids:
        return True, "Ace"
    if 4 in ids:
        return True, "Cam"
    return True, "Ox"


def residue_prefix_masses(peptide: ModifiedPeptide) -> np.ndarray:
    """Cumulative residue-plus-site-modification masses.

    Returns:
        Array of length L+1 where entry i is the summed mass of residues
        1..i including their site modifications. The N-terminal
        modification is excluded; callers add it where it applies.
    """
    masses = np.fromiter(
        (RESIDUE_MASSES[ch] for ch in peptide.residues),
        dtype=float,
        count=peptide.length,
    )
    for pos, unimod_id in peptide.site_mods:
        masses[pos - 1] += SUPPORTED_MODS[unimod_id][1]
    prefix = np.zeros(peptide.length + 1)
    np.cumsum(masses, out=prefix[1:])
    return prefix


def nterm_mass_delta(peptide: ModifiedPeptide) -> float:
    """Mass delta of the N-terminal modification, 0.0 when absent."""
    if peptide.nterm_mod is None:
        return 0.0
    return SUPPORTED_MODS[peptide.nterm_mod][1]


def monoisotopic_mass(peptide: ModifiedPeptide) -> float:
    """Neutral monoisotopic mass: residues + modification deltas + water."""
    prefix = residue_prefix_masses(peptide)
    return float(prefix[-1] + nterm_mass_delta(peptide) + WATER_MASS)


def scope_filter(record: SpectrumRecord) -> bool:
    """Return True when a record is inside the supported physical envelope.

    Checks length in [6, 40] and charge in [1, 6]. Quality gates
    (Andromeda score >= 70, |mass error| <= 20 ppm) apply only when the
    corresponding fields are present; modifications are whitelisted by
    construction of ModifiedPeptide. This is a filter, not a validator:
    it never raises.
    """
    length = record.peptide.length
    if not MIN_PEPTIDE_LENGTH <= length <= MAX_PEPTIDE_LENGTH:
        return False
    if not MIN_PRECURSOR_CHARGE <= record.precursor_charge <= MAX_PRECURSOR_CHARGE:
        return False
    if record.andromeda_score is not None and record.andromeda_score < MIN_ANDROMEDA_SCORE:
        return False
    if record.mass_error_ppm is not None and abs(record.mass_error_ppm) > MAX_MASS_ERROR_PPM:
        return False
    return True
