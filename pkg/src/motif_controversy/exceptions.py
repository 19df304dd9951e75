"""Errors raised by the motif_controversy package."""
from typing import Optional


class MotifControversyError(Exception):
    """Base class of every error raised by this package."""


class ThreadValidationError(MotifControversyError):
    """A thread does not form a valid reply tree."""

    def __init__(self, message: str, thread_id: Optional[str] = None) -> None:
        """Keep the offending thread id next to the message.

        Args:
            message: What is wrong with the thread.
            thread_id: Identifier of the offending thread, when known.
        """
        self.thread_id = thread_id
        prefix = f"thread {thread_id!r}: " if thread_id is not None else ""
        super().__init__(prefix + message)


class EmptyThread(ThreadValidationError):
    """A thread without any post."""


class MultipleRoots(ThreadValidationError):
    """More than one post (or none) has no parent."""


class MissingParent(ThreadValidationError):
    """A post refers to a parent id absent from the thread."""


class CycleDetected(ThreadValidationError):
    """Parent links do not form a tree."""


class DuplicatePost(ThreadValidationError):
    """Two posts share the same id."""


class TimestampOrder(ThreadValidationError):
    """A reply is older than its parent (strict mode only)."""


class DyadError(MotifControversyError):
    """A user pair outside the domain of the dyad taxonomy."""


class NoReplyEdge(DyadError):
    """The pair has no reply in either direction."""


class SelfPair(DyadError):
    """Both ends of the pair are the same user."""


class ClassifierError(MotifControversyError):
    """Training, prediction or evaluation cannot proceed."""


class DegenerateLabels(ClassifierError):
    """Training labels contain a single class."""


class EmptyMask(ClassifierError):
    """The feature mask selects no slot."""


class DimensionMismatch(ClassifierError):
    """Matrix, labels and slot table disagree in shape."""


class UntrainedModel(ClassifierError):
    """The model has no stump."""


class TooFewSamples(ClassifierError):
    """Not enough labeled threads per class for the requested protocol."""


class NoWeakLearner(ClassifierError):
    """No stump beats chance on the training data."""


class ModelFormatError(ClassifierError):
    """A serialized model cannot be read back."""


class DatasetError(MotifControversyError):
    """Input files or generator parameters are unusable."""


class ParseError(DatasetError):
    """A malformed line in a thread or follow file."""

    def __init__(self, message: str, line: int, path: Optional[str] = None) -> None:
        """Keep the line number next to the message.

        Args:
            message: What is wrong with the line.
            line: 1-based line number.
            path: File the line comes from.
        """
        self.line = line
        self.path = path
        where = f"{path}:{line}" if path is not None else f"line {line}"
        super().__init__(f"{where}: {message}")


class InvalidParams(DatasetError):
    """Synthetic generator parameters out of range."""
