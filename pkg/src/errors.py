"""Exception hierarchy for SyncKern.

Every error raised by the library derives from SynckernError. The CLI maps the
three families to exit codes: UsageError -> 1, DataError -> 2,
NumericalError -> 3.
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class SynckernError(Exception):
    """Base class for all SyncKern errors."""

    exit_code = EXIT_USAGE


class UsageError(SynckernError, ValueError):
    """Invalid parameter or configuration value."""

    exit_code = EXIT_USAGE


class DataError(SynckernError):
    """Input data is malformed or inconsistent."""

    exit_code = EXIT_DATA


class FormatError(DataError):
    """Binary artifact does not follow its on-disk format."""


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class NonFiniteValuesError(FormatError):
    pass


class ZeroVarianceColumnError(DataError):
    """One or more columns are constant over time."""

    def __init__(self, message, vertices=()):
        super().__init__(message)
        self.vertices = tuple(int(v) for v in vertices)


class DimensionMismatchError(DataError, ValueError):
    pass


class ManifestError(DataError):
    pass


class MissingScoreError(ManifestError):
    pass


class DuplicateSubjectError(ManifestError):
    pass


class NumericalError(SynckernError):
    """A computation is degenerate or failed numerically."""

    exit_code = EXIT_NUMERICAL


class SVDFailureError(NumericalError):
    pass


class DegenerateCorrelationError(NumericalError):
    pass


class DegenerateScoresError(NumericalError):
    pass


class BandwidthSelectionError(NumericalError):
    pass


class BootstrapResampleError(NumericalError):
    pass
