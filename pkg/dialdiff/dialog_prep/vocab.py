import logging
import re
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

from dialdiff.utils.constants import HASH_TOKEN, PER1_TOKEN, PER2_TOKEN, RESERVED_TOKENS, UNK_ID
from dialdiff.utils.exceptions import VocabularyException

_LOGGER = logging.getLogger(__name__)

_WORD_PATTERN = r"\w+|[^\w\s]"
_WITH_SPEAKER_TOKENS = re.compile(rf"\[PER1\]|\[PER2\]|#|{_WORD_PATTERN}")
_WITHOUT_SPEAKER_TOKENS = re.compile(rf"#|{_WORD_PATTERN}")
_SPECIALS: frozenset[str] = frozenset([HASH_TOKEN, PER1_TOKEN, PER2_TOKEN])


def split_tokens(text: str, speaker_tokens_enabled: bool = True) -> list[str]:
    """
    Deterministic word-level tokenization: `#` (and `[PER1]`/`[PER2]` when enabled) are single tokens, everything else
    is split into lowercased word runs and single punctuation marks. With speaker tokens disabled, `[PER1]` falls
    apart into `[`, `per1`, `]`, like a frozen tokenizer that has never seen it.
    """
    pattern = _WITH_SPEAKER_TOKENS if speaker_tokens_enabled else _WITHOUT_SPEAKER_TOKENS
    return [tok if tok in _SPECIALS else tok.lower() for tok in pattern.findall(text)]


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token list; a token's id is its position. Ids 0-4 are always PAD, UNK, `#`, `[PER1]`, `[PER2]`."""

    tokens: tuple[str, ...]
    speaker_tokens_enabled: bool = True
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.tokens[: len(RESERVED_TOKENS)] != RESERVED_TOKENS:
            raise VocabularyException(f"Vocabulary must start with the reserved tokens {RESERVED_TOKENS}.")
        if len(set(self.tokens)) != len(self.tokens):
            raise VocabularyException("Vocabulary tokens must be unique.")
        object.__setattr__(self, "_index", {tok: i for i, tok in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def token_id(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def encode(self, text: str) -> list[int]:
        return [self.token_id(tok) for tok in split_tokens(text, self.speaker_tokens_enabled)]

    def coverage(self, corpus: Iterable[str]) -> float:
        """Returns the out-of-vocabulary rate (fraction of tokens mapped to UNK) over the corpus."""
        total = 0
        unknown = 0
        for text in corpus:
            ids = self.encode(text)
            total += len(ids)
            unknown += sum(1 for i in ids if i == UNK_ID)
        return unknown / total if total else 0.0

    def save(self, path: Path) -> None:
        """Plain text, one token per line; line number (from 0) = id."""
        path.write_text("".join(f"{tok}\n" for tok in self.tokens), encoding="utf-8")

    @classmethod
    def load(cls, path: Path, speaker_tokens_enabled: bool = True) -> "Vocabulary":
        if not path.is_file():
            raise VocabularyException(f"Vocabulary file not found: {path}")
        tokens = tuple(line for line in path.read_text(encoding="utf-8").split("\n") if line != "")
        return cls(tokens=tokens, speaker_tokens_enabled=speaker_tokens_enabled)


def build_vocab(
    corpus: list[str], max_size: int | None = None, speaker_tokens_enabled: bool = True
) -> Vocabulary:
    """
    Builds a deterministic vocabulary: reserved tokens first, then every corpus word ranked by descending frequency
    (ties broken lexicographically). `max_size` caps the total size, reserved tokens included.
    """
    if not corpus:
        raise VocabularyException("Cannot build a vocabulary from an empty corpus.")
    counts: Counter[str] = Counter()
    for text in corpus:
        counts.update(tok for tok in split_tokens(text, speaker_tokens_enabled) if tok not in RESERVED_TOKENS)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    words = [tok for tok, _ in ranked]
    if max_size is not None:
        words = words[: max(0, max_size - len(RESERVED_TOKENS))]
    _LOGGER.debug(f"Built vocabulary with {len(words)} words from {len(corpus)} texts ({len(counts)} distinct).")
    return Vocabulary(tokens=RESERVED_TOKENS + tuple(words), speaker_tokens_enabled=speaker_tokens_enabled)
