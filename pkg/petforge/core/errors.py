"""
Exception hierarchy shared by every petforge package.
"""
from typing import Optional


class PetForgeError(Exception):
    """Base class for all lab errors."""


class ConfigurationError(PetForgeError):
    """Invalid run configuration, method spec or unknown option."""


class NumericError(PetForgeError):
    """Non-finite or otherwise unusable numeric value."""


class NumericAbortError(NumericError):
    """Training stopped because the loss became non-finite."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class DimensionError(PetForgeError):
    """Tensor extents do not agree."""


class ShapeError(DimensionError):
    """A named tensor has the wrong shape."""

    def __init__(self, message: str, name: Optional[str] = None):
        super().__init__(message)
        self.name = name


class ContractError(PetForgeError):
    """A caller broke an operation's precondition."""


class InputError(PetForgeError):
    """Input data is unusable (too short, empty, single-class, out of range)."""


class FormatError(PetForgeError):
    """Malformed container or text file."""

    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CorpusIOError(PetForgeError):
    """Reading or writing corpus files failed."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path


class MissingEmbeddingError(PetForgeError, KeyError):
    """A trial references an utterance with no embedding."""

    def __init__(self, utt_id: str):
        super().__init__(f"no embedding for utterance '{utt_id}'")
        self.utt_id = utt_id

    def __str__(self) -> str:
        return self.args[0]
