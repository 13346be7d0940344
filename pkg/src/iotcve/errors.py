"""Exception hierarchy shared across the package.

Three tiers map onto the CLI exit codes: UsageError (1) for caller
mistakes, DataError (2) for problems in the input data, and
InternalError (3) for violated internal invariants.
"""
from __future__ import annotations


class IotCveError(Exception):
    """Base class for every error raised by this package."""


class UsageError(IotCveError):
    """The caller asked for something invalid (bad flags, bad ranges)."""


class DataError(IotCveError):
    """The input data is malformed or insufficient."""


class InternalError(IotCveError):
    """An internal invariant was violated; indicates a bug."""


# --- cpe ---------------------------------------------------------------

class MalformedCpe(DataError):
    """A CPE string does not follow the URI or formatted-string binding."""


# --- nvd ---------------------------------------------------------------

class FeedUnreadable(DataError):
    """A feed file could not be parsed at the document level."""


# --- corpus ------------------------------------------------------------

class BadRange(UsageError):
    """A year range with start > end."""


class DuplicateCveId(DataError):
    """The same CVE id appears twice in a label file."""


class UnknownClassCode(DataError):
    """A label uses a class code outside the active taxonomy."""


class MalformedRow(DataError):
    """A label file row does not match the expected CSV shape."""


# --- features ----------------------------------------------------------

class EmptyCorpus(DataError):
    """No usable documents to fit a vocabulary on."""


# --- svm ---------------------------------------------------------------

class DegenerateProblem(DataError):
    """A binary training set with fewer than two points or one label sign."""


class NonFinite(InternalError):
    """Training produced non-finite weights."""


class SingleClassDataset(DataError):
    """Multiclass training needs at least two distinct classes."""


class IndexOutOfRange(UsageError):
    """A sparse vector references a feature index outside the model."""


class ModelVersionMismatch(DataError):
    """A model file was written by an incompatible format version."""


class MalformedModel(DataError):
    """A model file is structurally broken."""


# --- evaluate ----------------------------------------------------------

class LengthMismatch(UsageError):
    """Truth and prediction sequences differ in length."""


class UnknownLabel(DataError):
    """An evaluated label is not part of the taxonomy."""


class EmptyEvaluation(DataError):
    """No examples to evaluate."""


class UnsupportedFormat(UsageError):
    """An unknown report rendering format was requested."""


# --- experiment --------------------------------------------------------

class EmptyTrainSet(DataError):
    """No labeled records fall inside the training range."""


class EmptyTestSet(DataError):
    """No labeled records fall inside the test period."""
