from dataclasses import dataclass

from dialdiff.dialog_prep.concat import concat_dialog
from dialdiff.dialog_prep.vocab import Vocabulary
from dialdiff.models.dialog_models import Dialog
from dialdiff.models.types import ConcatStrategy, KeepMode
from dialdiff.utils.constants import MAX_TOKENS
from dialdiff.utils.exceptions import PreprocessingException


@dataclass(frozen=True)
class TokenSeq:
    """Vocabulary ids of one conditioning text after truncation. `source_length` is the pre-truncation length."""

    ids: tuple[int, ...]
    source_length: int

    def __post_init__(self) -> None:
        if not 1 <= len(self.ids) <= MAX_TOKENS:
            raise PreprocessingException(f"TokenSeq length must lie in [1, {MAX_TOKENS}]. Got {len(self.ids)}.")

    @property
    def length(self) -> int:
        return len(self.ids)

    @property
    def truncated(self) -> bool:
        return self.source_length > len(self.ids)


def tokenize_truncate(
    text: str, vocab: Vocabulary, keep: KeepMode = KeepMode.HEAD, max_tokens: int = MAX_TOKENS
) -> TokenSeq:
    """
    Tokenizes `text` and enforces the token budget. HEAD keeps the first `max_tokens` tokens (the tail of the text is
    dropped), TAIL keeps the last `max_tokens`. Unknown words map to UNK.
    """
    if not 1 <= max_tokens <= MAX_TOKENS:
        raise PreprocessingException(f"max_tokens must lie in [1, {MAX_TOKENS}]. Got {max_tokens}.")
    if not text or not text.strip():
        raise PreprocessingException("Cannot tokenize an empty text.")
    ids = vocab.encode(text)
    if not ids:
        raise PreprocessingException(f"Text tokenizes to zero tokens: {text!r}")
    kept = ids[:max_tokens] if keep == KeepMode.HEAD else ids[-max_tokens:]
    return TokenSeq(ids=tuple(kept), source_length=len(ids))


def tokenize_dialog(
    dialog: Dialog,
    vocab: Vocabulary,
    strategy: ConcatStrategy,
    keep: KeepMode = KeepMode.HEAD,
    max_tokens: int = MAX_TOKENS,
) -> TokenSeq:
    return tokenize_truncate(concat_dialog(dialog, strategy), vocab, keep=keep, max_tokens=max_tokens)


def validate_dialog(dialog: Dialog, vocab: Vocabulary) -> None:
    """Raises `PreprocessingException` unless the dialog concatenates and tokenizes under every strategy."""
    for strategy in ConcatStrategy:
        tokenize_dialog(dialog, vocab, strategy)
