"""Exception types raised by the pepspec library.

Every error the library raises deliberately derives from :class:`PepspecError`
so callers can catch the whole family with one clause. The CLI maps these to
structured error reports on stderr and a nonzero exit code.
"""

from __future__ import annotations


class PepspecError(Exception):
    """Base class for all pepspec errors."""


class PeptideError(PepspecError):
    """Base class for peptide parsing and validation errors."""


class UnknownResidueError(PeptideError):
    """A sequence contains a character outside the 20 canonical residues."""


class UnsupportedModificationError(PeptideError):
    """A modification token names a PTM outside the supported whitelist."""


class MalformedTokenError(PeptideError):
    """A modification token cannot be parsed at all."""


class ScopeViolationError(PeptideError):
    """A record falls outside the supported length/charge envelope."""


class IonError(PepspecError):
    """Base class for fragment-ion and index-layout errors."""


class OutOfBoundsError(IonError):
    """A canonical ion index or its components fall outside the layout."""


class PositionBeyondPeptideError(IonError):
    """A cleavage position was requested past the end of a peptide."""


class EmptyMaskError(PepspecError):
    """A validity mask with no true entries where at least one is required."""


class LayoutMismatchError(PepspecError):
    """Two canonical vectors or layouts of different dimensionality met."""


class MaskMismatchError(PepspecError):
    """Paired vectors were scored under masks that disagree."""


class EmptyInputError(PepspecError):
    """An operation that needs at least one row received none."""


class MissingKeyColumnError(PepspecError):
    """A split or join rule needs a column the input table lacks."""


class QuotaZeroError(PepspecError):
    """A sampling quota of zero (or negative) was requested."""


class EmptyTrainingError(PepspecError):
    """Baseline training received no usable rows."""


class EmptyModelError(PepspecError):
    """A baseline model artifact contains no buckets."""


class MissingBaselineBinError(PepspecError):
    """Prediction hit a key absent from the model with snapping disabled."""


class SchemaError(PepspecError):
    """An input table is missing required columns or has malformed cells."""
