"""Exception hierarchy shared by the library and the command line."""


class AsyncDmtError(Exception):
    pass


class ValidationError(AsyncDmtError, ValueError):
    """Bad user input: maps to CLI exit code 2."""


class DimensionError(ValidationError):
    pass


class ModeMismatchError(ValidationError):
    """A finite-support object used where a band-limited one is required (or vice versa)."""


class UnsupportedError(ValidationError):
    pass


class SourceAloneError(UnsupportedError):
    """No cooperative frame split is optimal: the source should transmit alone."""


class NumericalCheckError(AsyncDmtError):
    """A numerical verification failed: maps to CLI exit code 3."""


class SingularNoiseError(NumericalCheckError):
    """Matched-filter noise covariance is singular for the given waveform set."""
