from dialdiff.dialog_prep.concat import concat_dialog, split_hash_prefix
from dialdiff.dialog_prep.tokenize import TokenSeq, tokenize_dialog, tokenize_truncate, validate_dialog
from dialdiff.dialog_prep.vocab import Vocabulary, build_vocab, split_tokens

__all__ = [
    "TokenSeq",
    "Vocabulary",
    "build_vocab",
    "concat_dialog",
    "split_hash_prefix",
    "split_tokens",
    "tokenize_dialog",
    "tokenize_truncate",
    "validate_dialog",
]
