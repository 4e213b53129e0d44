"""Exception hierarchy shared by all toolkit modules.

Three families map onto the CLI exit codes: input validation problems
(exit 2), missing input files (exit 3) and metric/numeric failures that
arise mid-computation (exit 4).
"""


class PvcevalError(Exception):
    """Base class for all toolkit errors."""


class InputValidationError(PvcevalError):
    """Malformed or contract-violating input (CLI exit code 2)."""


class MissingInputError(PvcevalError):
    """A required input file or selection is absent (CLI exit code 3)."""


class MetricComputationError(PvcevalError):
    """Input is structurally fine but the metric cannot be computed (exit 4)."""


# --- audio / front end ------------------------------------------------------

class UnsupportedFormat(InputValidationError):
    """WAV file is not 16-bit mono PCM."""


class CorruptHeader(InputValidationError):
    """File is not a parseable RIFF/WAVE container."""


class AllSilent(MetricComputationError):
    """Every reference frame fell below the silence threshold."""


class TooShort(MetricComputationError):
    """Signal yields fewer frames than one correlation segment."""


# --- alignment --------------------------------------------------------------

class DimensionMismatch(InputValidationError):
    """Feature or vector dimensions disagree."""


class EmptySequence(InputValidationError):
    """An alignment input has no frames."""


class InvalidPath(InputValidationError):
    """Alignment path inconsistent with the sequences it claims to align."""


# --- intelligibility --------------------------------------------------------

class EmptyControlSet(InputValidationError):
    """No control utterances supplied for reference construction."""


class EmptyInput(InputValidationError):
    """An aggregation received no values."""


class MixedSpeakers(InputValidationError):
    """Speaker-level aggregation received scores from several speakers."""


# --- phoneme scoring --------------------------------------------------------

class EmptyReference(InputValidationError):
    """Reference phoneme sequence is empty."""


class SpeakerSetMismatch(InputValidationError):
    """Systems in a table do not cover the same speakers."""


class MissingTranscripts(MissingInputError):
    """Phoneme transcript file absent."""


# --- speaker verification ---------------------------------------------------

class ZeroVector(MetricComputationError):
    """Cosine similarity of a zero-norm embedding is undefined."""


class UnknownSpeaker(InputValidationError):
    """Record references a speaker the manifest does not declare."""


class UnknownStage(InputValidationError):
    """Speaker exists but has no such recording stage."""


class EmptyScores(InputValidationError):
    """EER needs at least one target and one nontarget score."""


class MissingEmbeddings(MissingInputError):
    """Embedding file absent."""


# --- statistics -------------------------------------------------------------

class LengthMismatch(InputValidationError):
    """Paired samples have different lengths."""


class ZeroVariance(MetricComputationError):
    """Correlation undefined for a constant sample."""


class OutOfScale(InputValidationError):
    """Rating outside the declared scale."""


class InvalidIncrement(InputValidationError):
    """Rating not on the declared step grid."""


# --- corpus -----------------------------------------------------------------

class ParseError(InputValidationError):
    """Manifest file does not parse as the versioned format."""


class ValidationError(InputValidationError):
    """Manifest parsed but violates a schema invariant."""


class WrongCount(InputValidationError):
    """Sentence partition requires exactly 92 distinct ids."""


# --- reporting --------------------------------------------------------------

class EmptySelection(InputValidationError):
    """An experiment resolved to zero speakers or utterances."""
