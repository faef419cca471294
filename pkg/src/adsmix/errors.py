"""Exception hierarchy.

``DataError`` covers bad inputs and contract violations (CLI exit code 2),
``ServiceError`` covers remote embedding/summarization failures (exit code 3).
"""

from __future__ import annotations


class AdsError(Exception):
    """Base class for every error raised by the toolkit."""


class DataError(AdsError, ValueError):
    pass


class ServiceError(AdsError):
    pass


class MalformedLine(DataError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        msg = f"malformed line {line_no}"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class DuplicateId(DataError):
    def __init__(self, id_: str):
        self.id = id_
        super().__init__(f"duplicate id {id_!r}")


class EmptyCorpus(DataError):
    pass


class EmptyDataset(DataError):
    pass


class EmptyArticle(DataError):
    def __init__(self, id_: str):
        self.id = id_
        super().__init__(f"article {id_!r} has no sentences")


class EmptyInput(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class KTooLarge(DataError):
    pass


class InvalidK(DataError):
    pass


class EmbeddingFailure(DataError):
    def __init__(self, id_: str, reason: str = ""):
        self.id = id_
        msg = f"could not embed summary of {id_!r}"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class IdCollision(DataError):
    def __init__(self, id_: str):
        self.id = id_
        super().__init__(f"sample id {id_!r} appears in more than one dataset")


class LengthMismatch(DataError):
    pass


class MissingPrediction(DataError):
    def __init__(self, id_: str):
        self.id = id_
        super().__init__(f"no prediction for sample {id_!r}")


class TooManyClusters(DataError):
    pass


class NoSummaries(DataError):
    pass


class TooFewSentences(DataError):
    pass


class ServiceUnreachable(ServiceError):
    pass


class ServiceTimeout(ServiceError):
    pass


class BadResponse(ServiceError):
    pass
