"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`KgSynthError`.
The four intermediate classes map onto the CLI exit codes.
"""

from __future__ import annotations


class KgSynthError(Exception):
    """Base class for all package errors."""


class ConfigError(KgSynthError):
    """Invalid configuration, schema file, or manifest."""


class DataError(KgSynthError, ValueError):
    """Input data violates a table or metric contract."""


class GenerationError(KgSynthError):
    """Synthetic patient generation or knowledge retrieval failed."""


class BackendError(KgSynthError):
    """The language-model backend could not be reached."""


# -- tables -----------------------------------------------------------------


class InvalidSchema(ConfigError, ValueError):
    pass


class MissingColumn(DataError):
    def __init__(self, column: str):
        super().__init__(f"missing column {column!r}")
        self.column = column


class UnknownColumn(DataError):
    def __init__(self, column: str):
        super().__init__(f"unknown column {column!r}")
        self.column = column


class OutOfDomainValue(DataError):
    def __init__(self, row: int, column: str, value: object):
        super().__init__(f"row {row}, column {column!r}: value {value!r} outside the declared domain")
        self.row = row
        self.column = column
        self.value = value


class MissingCell(DataError):
    def __init__(self, row: int, column: str):
        super().__init__(f"row {row}, column {column!r}: empty cell")
        self.row = row
        self.column = column


class EmptyTable(DataError):
    pass


class SchemaMismatch(DataError):
    pass


# -- metrics ----------------------------------------------------------------


class DomainMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class TooFewColumns(DataError):
    pass


class EmptySynthetic(EmptyTable):
    pass


class EmptyReal(EmptyTable):
    pass


class InsufficientResamples(DataError):
    pass


class EmptyCandidateList(DataError):
    pass


class MissingNoKBVariant(ConfigError, ValueError):
    pass


# -- generation -------------------------------------------------------------


class EmptyDomain(ConfigError, ValueError):
    pass


class EmptyCorpus(GenerationError):
    pass


class UnreadableFile(GenerationError):
    pass


class IndexNotBuilt(GenerationError):
    pass


class ItemOutOfOrder(GenerationError):
    pass


class ScoreParseError(GenerationError):
    """The reply could not be turned into a Likert score."""


class NoScoreLine(ScoreParseError):
    pass


class OutOfDomainScore(ScoreParseError):
    def __init__(self, token: str, domain):
        super().__init__(f"score {token!r} not in {list(domain)}")
        self.token = token


class PatientGenerationFailed(GenerationError):
    def __init__(self, item_id: str, attempts: int):
        super().__init__(f"no valid score for item {item_id!r} after {attempts} attempts")
        self.item_id = item_id
        self.attempts = attempts


class BackendUnavailable(BackendError):
    pass
