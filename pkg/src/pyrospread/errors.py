"""Typed error hierarchy shared by every module.

Exit-code policy for the CLI: validation failures (bad parameters, grid
mismatches, stability violations) map to 2; runtime failures (numerical
blow-up, file-format problems, missing files) map to 3.
"""


class FireModelError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ValidationError(FireModelError):
    """Input rejected before any work started."""

    exit_code = 2


class SpecMismatch(ValidationError):
    """Two grids that must agree (height, width, dx) do not."""


class BadRange(ValidationError):
    """A numeric parameter is outside its allowed range."""


class TooFewFrames(ValidationError):
    """A history/sequence is shorter than the operation requires."""


class EmptyVector(ValidationError):
    """A vector argument has zero length."""


class EmptyInput(ValidationError):
    """A list argument that must be non-empty is empty."""


class UnknownKind(ValidationError):
    """An enumerated selector has an unrecognized value."""


class NegativeFuel(ValidationError):
    """Fuel concentration must be non-negative everywhere."""


class CflViolation(ValidationError):
    """Time step exceeds an explicit-integration stability bound."""


class GridTooSmall(ValidationError):
    """Grid is too small for a windowed operation."""


class NoPositives(ValidationError):
    """Precision-recall area is undefined without a positive cell."""


class WindFrameCountMismatch(ValidationError):
    """Wind frame count disagrees with the declared observation count."""


class NonFinite(FireModelError):
    """A NaN or Inf appeared where only finite values are allowed."""


class FormatError(FireModelError):
    """Base class for file-format failures."""


class BadMagic(FormatError):
    """File does not start with the expected magic bytes."""


class BadHeader(FormatError):
    """Header fields are present but malformed or out of range."""


class NonBinaryPixel(FormatError):
    """A mask file contains a pixel value other than 0 or 255."""


class TruncatedPayload(FormatError):
    """File size disagrees with the size implied by its header."""


class MissingManifest(FormatError):
    """A sequence/bundle directory has no manifest file."""


class MissingComponent(FormatError):
    """A required file is absent from a directory layout."""


class SpecMismatchAcrossFrames(FormatError):
    """Frames of one sequence were written with different grids."""


class ManifestMismatch(FormatError):
    """Manifest counts disagree with the files actually on disk."""
