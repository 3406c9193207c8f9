"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`PrivfeatError`, so callers (and the CLI) can separate expected
input problems from programming errors.
"""


class PrivfeatError(Exception):
    """Base class for all library errors."""


# -- decoding -----------------------------------------------------------------

class DecodeError(PrivfeatError, ValueError):
    """The byte stream could not be turned into audio."""


class MalformedHeader(DecodeError):
    pass


class UnsupportedEncoding(DecodeError):
    pass


class TruncatedData(DecodeError):
    pass


# -- framing / kernels ----------------------------------------------------------

class BufferTooShort(PrivfeatError, ValueError):
    pass


class FrameTooShort(PrivfeatError, ValueError):
    pass


class DegenerateFrame(PrivfeatError, ValueError):
    """Raised when a normalised statistic has a zero denominator.

    ``correlations`` carries the all-zero result so callers that want the
    defined fallback can use it without recomputing anything.
    """

    def __init__(self, message, correlations=None):
        super().__init__(message)
        self.correlations = correlations


# -- catalog / selection -------------------------------------------------------

class UnknownFeatureId(PrivfeatError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown feature id"


class MissingFeatureScores(PrivfeatError, ValueError):
    pass


class ScoreFileError(PrivfeatError, ValueError):
    pass


# -- leakage metrics -----------------------------------------------------------

class EmptyAttributes(PrivfeatError, ValueError):
    pass


class NonPositiveBaseline(PrivfeatError, ValueError):
    pass


class InvalidWeights(PrivfeatError, ValueError):
    pass


class InvalidTable(PrivfeatError, ValueError):
    pass
