"""
Dialog concatenation strategies. Every function here is pure; the same dialog and strategy always yield the same
string.
"""

from dialdiff.models.dialog_models import Dialog
from dialdiff.models.types import ConcatStrategy
from dialdiff.utils.constants import HASH_TOKEN, PER1_TOKEN, PER2_TOKEN
from dialdiff.utils.exceptions import PreprocessingException

_SPEAKER_TOKENS: dict[int, str] = {0: PER1_TOKEN, 1: PER2_TOKEN}
_SPEAKER_LETTERS: dict[int, str] = {0: "A:", 1: "B:"}


def concat_dialog(dialog: Dialog, strategy: ConcatStrategy) -> str:
    """
    Merge the dialog's turns into one conditioning string.

    HASH_PREFIX:    each turn prefixed with `#`, no separator between turns.
    SPACE_JOIN:     turns joined with a single space.
    SPEAKER_TOKEN:  `[PER1]`/`[PER2]` + one space before each turn, turns joined with a single space.
    SPEAKER_LETTER: same with `A:`/`B:`.
    """
    if not dialog.turns:
        raise PreprocessingException(f"Cannot concatenate dialog {dialog.sample_id}: it has no turns.")
    texts = [turn.text for turn in dialog.turns]
    match strategy:
        case ConcatStrategy.HASH_PREFIX:
            return "".join(f"{HASH_TOKEN}{text}" for text in texts)
        case ConcatStrategy.SPACE_JOIN:
            return " ".join(texts)
        case ConcatStrategy.SPEAKER_TOKEN:
            return " ".join(f"{_SPEAKER_TOKENS[turn.speaker_id]} {turn.text}" for turn in dialog.turns)
        case ConcatStrategy.SPEAKER_LETTER:
            return " ".join(f"{_SPEAKER_LETTERS[turn.speaker_id]} {turn.text}" for turn in dialog.turns)
    raise PreprocessingException(f"Unknown concatenation strategy: {strategy}")  # pragma: no cover


def split_hash_prefix(text: str) -> list[str]:
    """Recovers the turn texts from a HASH_PREFIX string whose turns contain no `#`."""
    if not text.startswith(HASH_TOKEN):
        raise PreprocessingException("HASH_PREFIX text must start with the turn marker.")
    return text.split(HASH_TOKEN)[1:]
