"""Exception hierarchy shared by services, pipeline and CLI.

Each family carries the process exit code the CLI uses:
config problems exit 2, data problems 3, backend failures 4.
"""
from typing import Optional


class ToolkitError(Exception):
    """Base class for every error the toolkit raises on purpose"""

    exit_code = 1


# Configuration errors -------------------------------------------------------

class ConfigError(ToolkitError):
    exit_code = 2


class UnknownCondition(ConfigError):
    def __init__(self, label: str, known: Optional[list] = None):
        self.label = label
        message = f"Unknown condition label: {label!r}"
        if known:
            message += f" (known: {', '.join(known)})"
        super().__init__(message)


class MalformedLabel(ConfigError):
    def __init__(self, label: str, token: str):
        self.label = label
        self.token = token
        super().__init__(f"Malformed condition label {label!r}: bad token {token!r}")


# Data errors ----------------------------------------------------------------

class DataError(ToolkitError):
    exit_code = 3


class EmptySentence(DataError):
    pass


class EmptyInput(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class CorpusLengthMismatch(DataError):
    pass


class MissingBaseline(DataError):
    pass


class CorruptCacheLine(DataError):
    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(f"Corrupt cache line {line_number}: {reason}")


class ConlluError(DataError):
    def __init__(self, message: str, line_number: Optional[int] = None, source: Optional[str] = None):
        self.line_number = line_number
        self.source = source
        prefix = ""
        if source:
            prefix += f"{source}: "
        if line_number is not None:
            prefix += f"line {line_number}: "
        super().__init__(prefix + message)


class MalformedLine(ConlluError):
    pass


class NonContiguousIds(ConlluError):
    pass


class MissingRoot(ConlluError):
    pass


# Backend errors -------------------------------------------------------------

class BackendError(ToolkitError):
    exit_code = 4

    retryable = False

    def __init__(self, message: str, sentence_index: Optional[int] = None,
                 condition_label: Optional[str] = None):
        self.sentence_index = sentence_index
        self.condition_label = condition_label
        super().__init__(message)

    def annotate(self, sentence_index: int, condition_label: Optional[str] = None) -> "BackendError":
        """Attach the failing sentence position; returns self for re-raising"""
        self.sentence_index = sentence_index
        self.condition_label = condition_label
        context = f"sentence {sentence_index}"
        if condition_label:
            context = f"condition {condition_label}, {context}"
        self.args = (f"{context}: {self.args[0]}",)
        return self


class AuthError(BackendError):
    pass


class QuotaError(BackendError):
    retryable = True

    def __init__(self, message: str, retry_after: Optional[float] = None, **kwargs):
        self.retry_after = retry_after
        super().__init__(message, **kwargs)


class NetworkError(BackendError):
    retryable = True


class MissingFixture(BackendError):
    pass
