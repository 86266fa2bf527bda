"""Exception hierarchy.

Everything raised by this package derives from :class:`StrokeHmmError`.
The CLI maps the two broad categories to exit codes: :class:`DataError`
(bad or insufficient input) exits with 3, :class:`NumericalFailure`
(non-finite intermediate that should be impossible on finite input)
exits with 4.
"""


class StrokeHmmError(Exception):
    """Base class for all package errors."""


class DataError(StrokeHmmError):
    """Input data is malformed, missing, or insufficient."""


class NumericalFailure(StrokeHmmError):
    """A recursion produced a non-finite value despite variance flooring.

    This indicates a bug or corrupted input, never a normal outcome.
    """


# --- model construction / training ---

class EmptyTrainingSet(DataError):
    pass


class SequenceTooShort(DataError):
    """A training sequence has fewer samples than the model has states."""


class InvalidDimensions(DataError):
    """Array shapes are inconsistent with each other or with the model."""


class DimensionMismatch(InvalidDimensions):
    """An observation's feature count does not match the model."""


# --- stroke parsing / feature extraction ---

class MalformedRow(DataError):
    def __init__(self, row_index, reason):
        super().__init__(f"row {row_index}: {reason}")
        self.row_index = row_index
        self.reason = reason


class EmptyFile(DataError):
    pass


class StrokeTooShort(DataError):
    """A stroke has fewer than two touch events."""


class EmptyPool(DataError):
    """No samples available to fit the feature normalizer."""


# --- enrollment ---

class TooFewSequences(DataError):
    """Fewer training sequences than cross-validation requires."""


class NoFeasibleConfiguration(DataError):
    """Every candidate (states, mixtures) pair violates the evidence
    constraint or fails to train on the available strokes."""


# --- serialization ---

class SerializationError(DataError):
    """A stored model/template document is malformed or has an
    unsupported format tag."""


# --- scoring / evaluation ---

class WindowLargerThanSequence(DataError):
    """Fusion window exceeds the number of available scores.

    Not fatal: the caller should accumulate more strokes (or skip the
    window size) and retry.
    """


class ScenarioUnsupportedByData(DataError):
    """The dataset lacks the session/day structure a scenario needs."""


class SingleUserDataset(DataError):
    """Impostor scoring needs at least two users."""


class EmptyScoreSet(DataError):
    pass


class UserNotFound(DataError):
    pass
