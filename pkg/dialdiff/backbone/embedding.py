import logging
from collections.abc import Sequence

import torch
from torch import nn

from dialdiff.dialog_prep.tokenize import TokenSeq
from dialdiff.utils.constants import MAX_TOKENS, PAD_ID, TEXT_EMBED_DIM
from dialdiff.utils.exceptions import VocabularyException

_LOGGER = logging.getLogger(__name__)


class FrozenTextEmbedding(nn.Module):
    """
    Stand-in for a frozen text encoder followed by a linear reduction to `TEXT_EMBED_DIM`: a token table and a
    projection, both held as buffers so they never appear among the trainable parameters.
    """

    table: torch.Tensor
    projection: torch.Tensor

    def __init__(self, table: torch.Tensor, projection: torch.Tensor):
        super().__init__()
        if table.ndim != 2 or projection.ndim != 2 or table.shape[1] != projection.shape[0]:
            raise VocabularyException(
                f"Incompatible embedding shapes: table {tuple(table.shape)}, projection {tuple(projection.shape)}"
            )
        self.register_buffer("table", table.detach().to(torch.float64).clone())
        self.register_buffer("projection", projection.detach().to(torch.float64).clone())

    @classmethod
    def from_seed(cls, vocab_size: int, seed: int, dim: int = TEXT_EMBED_DIM) -> "FrozenTextEmbedding":
        generator = torch.Generator().manual_seed(seed)
        table = torch.randn((vocab_size, dim), generator=generator, dtype=torch.float64)
        projection = torch.randn((dim, dim), generator=generator, dtype=torch.float64) / dim**0.5
        _LOGGER.debug(f"Frozen text embedding drawn for vocab_size={vocab_size}, dim={dim}, seed={seed}")
        return cls(table=table, projection=projection)

    @property
    def vocab_size(self) -> int:
        return int(self.table.shape[0])

    @property
    def dim(self) -> int:
        return int(self.projection.shape[1])


def embed_text(tokens: TokenSeq, emb: FrozenTextEmbedding, max_tokens: int = MAX_TOKENS) -> torch.Tensor:
    """Returns y_0 of shape [max_tokens, dim]: projected table rows of the ids, padded with the projected PAD row."""
    ids = list(tokens.ids)
    bad = [i for i in ids if not 0 <= i < emb.vocab_size]
    if bad:
        raise VocabularyException(f"Token ids out of range for a vocabulary of size {emb.vocab_size}: {bad}")
    padded = torch.full((max_tokens,), PAD_ID, dtype=torch.long)
    padded[: len(ids)] = torch.tensor(ids[:max_tokens], dtype=torch.long)
    with torch.no_grad():
        return emb.table[padded] @ emb.projection


def embed_batch(seqs: Sequence[TokenSeq], emb: FrozenTextEmbedding, max_tokens: int = MAX_TOKENS) -> torch.Tensor:
    return torch.stack([embed_text(seq, emb, max_tokens=max_tokens) for seq in seqs])
