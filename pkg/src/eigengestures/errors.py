"""Exception hierarchy shared by all pipeline stages.

Every error belongs to one of four families, each mapped to a fixed CLI
exit code: configuration (2), data (3), numerical (4), I/O (5).
"""


class EigengestureError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class ConfigError(EigengestureError):
    """Invalid run configuration or out-of-range request."""

    exit_code = 2


class DataError(EigengestureError):
    """Corpus content violates a contract (shape, completeness, state)."""

    exit_code = 3


class NumericalError(EigengestureError):
    """Numerical pathology that must abort the run."""

    exit_code = 4


class IoFailure(EigengestureError):
    """File could not be read or written."""

    exit_code = 5


# -- configuration family -----------------------------------------------

class BadConfig(ConfigError):
    """Configuration field violates its invariant."""


class BadTarget(ConfigError):
    """Resampling target length below the minimum of 2."""


class CountOutOfRange(ConfigError):
    """Requested more eigengestures than the decomposition provides."""


class RankOutOfRange(ConfigError):
    """Requested reconstruction rank outside 1..q."""


class FrameOutOfRange(ConfigError):
    """Requested pose frame index outside 1..N."""


# -- data family ---------------------------------------------------------

class MalformedFile(DataError):
    """Recording or manifest file does not parse as documented."""


class TooShort(DataError):
    """Recording has fewer than 2 samples."""


class BadShape(DataError):
    """Array argument has the wrong dimensions."""


class MissingRealisation(DataError):
    """A (gesture, realisation) slot of the tensor has no recording."""


class DuplicateRealisation(DataError):
    """Two recordings map to the same (gesture, realisation) slot."""


class UnknownRealisation(DataError):
    """Requested (gesture, realisation) column is not in the data matrix."""


class NotStudentised(DataError):
    """Operation requires a studentised tensor."""


class EmptyInput(DataError):
    """Quantiles of an empty value set are undefined."""


# -- numerical family ----------------------------------------------------

class NoConvergence(NumericalError):
    """SVD iteration budget exceeded."""


class DegenerateSensor(NumericalError):
    """A sensor channel is constant; studentisation would divide by ~0."""


# -- warnings (reported, not fatal) ---------------------------------------

class DegenerateSpectrumWarning(UserWarning):
    """All singular values beyond the first are zero; the normalised
    error curve is defined as zero beyond n=1."""


class FlatEigengestureChannelWarning(UserWarning):
    """An eigengesture channel has (near-)zero dispersion; it is remapped
    with scale 0 and renders as constant at the neutral pose."""
