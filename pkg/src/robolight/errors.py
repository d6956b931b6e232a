"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage errors -> 1, validation
errors -> 2, I/O errors -> 3.
"""


class RobolightError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(RobolightError, ValueError):
    """Input violates a documented precondition or schema rule."""


class ManifestError(ValidationError):
    """Episode manifest fails schema validation.

    The message carries the offending field path, e.g. ``streams[2].rate``.
    """


class SyncStructureError(RobolightError):
    """Episodes are structurally incomparable (e.g. frame-count mismatch).

    Distinct from a tolerance failure, which is reported in a SyncReport.
    """


class JobBudgetError(RobolightError):
    """A rejection-sampling or retry budget was exhausted."""
