import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import torch

from dialdiff.backbone.embedding import FrozenTextEmbedding, embed_batch
from dialdiff.config.app_settings import AppSettings, DataConfig
from dialdiff.data.dataset_io import ImageSet, read_image_set, read_split_manifest
from dialdiff.data.photochat import load_photochat
from dialdiff.data.shapetalk import gen_shapetalk
from dialdiff.dialog_prep.concat import concat_dialog
from dialdiff.dialog_prep.tokenize import TokenSeq, tokenize_dialog
from dialdiff.dialog_prep.vocab import Vocabulary, build_vocab
from dialdiff.diffusion.samplers import NoisePredictor, sample_ancestral, sample_dpm_solver
from dialdiff.diffusion.schedule import NoiseSchedule
from dialdiff.models.dialog_models import Dialog
from dialdiff.models.types import ConcatStrategy, SamplerName, Split
from dialdiff.utils.constants import INDEX_FILENAME, SPLIT_MANIFEST_FILENAME
from dialdiff.utils.exceptions import CheckpointException, DatasetFormatException
from dialdiff.utils.seeding import chain_generators

_LOGGER = logging.getLogger(__name__)

SHAPETALK_DATASET = "shapetalk"
SAMPLES_DIRNAME = "samples"


def load_splits(data_config: DataConfig) -> dict[Split, ImageSet]:
    """
    Resolves `data.dataset`: `shapetalk` generates both splits from `data_seed`; a directory written by `gen-data`
    is read split by split and checked against its split manifest; a JSONL file is the train split, with
    `data.test_dataset` as the optional test split.
    """
    if data_config.dataset == SHAPETALK_DATASET:
        splits: dict[Split, ImageSet] = {}
        for split, n in ((Split.TRAIN, data_config.n_train), (Split.TEST, data_config.n_test)):
            samples = gen_shapetalk(n, data_config.data_seed, split)
            images = torch.stack([s.image for s in samples])
            splits[split] = ImageSet(dialogs=[s.dialog for s in samples], images=images)
        return splits
    location = Path(data_config.dataset)
    if location.is_dir() and (location / SPLIT_MANIFEST_FILENAME).is_file():
        return _read_dataset_dir(location)
    if location.is_file():
        splits = {Split.TRAIN: read_image_set(location)}
        if data_config.test_dataset:
            splits[Split.TEST] = read_image_set(Path(data_config.test_dataset))
        return splits
    raise DatasetFormatException(f"Dataset {data_config.dataset!r} is neither {SHAPETALK_DATASET!r} nor a path.")


def _read_dataset_dir(location: Path) -> dict[Split, ImageSet]:
    manifest = read_split_manifest(location)
    splits: dict[Split, ImageSet] = {}
    for split, listed_ids in manifest.splits.items():
        if not listed_ids:
            continue
        image_set = read_image_set(location / split.value)
        unlisted = set(image_set.sample_ids).difference(listed_ids)
        if unlisted:
            raise DatasetFormatException(
                f"{location / split.value} holds samples not listed for the {split.value} split in "
                f"{SPLIT_MANIFEST_FILENAME}: {sorted(unlisted)[:5]}"
            )
        splits[split] = image_set
    return splits


def load_dialogs(source: str, data_config: DataConfig) -> list[Dialog]:
    """Dialogs to condition on: the ShapeTalk-lite test split, a dataset directory's test split or a JSONL file."""
    if source == SHAPETALK_DATASET:
        return [s.dialog for s in gen_shapetalk(data_config.n_test, data_config.data_seed, Split.TEST)]
    location = Path(source)
    if location.is_dir():
        location = location / Split.TEST.value / INDEX_FILENAME
    return load_photochat(location, check_images=False).dialogs


def with_sample_refs(dialogs: Sequence[Dialog]) -> list[Dialog]:
    """Copies of the dialogs pointing at `images/<sample_id>.png`, where generated images are written."""
    return [d.model_copy(update={"image_ref": f"images/{d.sample_id}.png"}) for d in dialogs]


@dataclass(frozen=True)
class Conditioning:
    """Turns dialogs into the text embeddings y_0 [N, L, D] the noise predictor is conditioned on."""

    vocab: Vocabulary
    embedding: FrozenTextEmbedding
    strategy: ConcatStrategy
    data_config: DataConfig
    text_len: int

    @classmethod
    def build(cls, settings: AppSettings, train_dialogs: Sequence[Dialog]) -> "Conditioning":
        """Builds the vocabulary from the training dialogs, concatenated with the configured strategy."""
        data_config = settings.data
        vocab = build_vocab(
            [concat_dialog(d, data_config.strategy) for d in train_dialogs],
            max_size=data_config.max_vocab_size,
            speaker_tokens_enabled=data_config.speaker_tokens_in_vocab,
        )
        return cls.from_vocab(settings, vocab)

    @classmethod
    def from_vocab(cls, settings: AppSettings, vocab: Vocabulary) -> "Conditioning":
        embedding = FrozenTextEmbedding.from_seed(
            vocab.size, settings.model.embedding_seed, dim=settings.model.text_dim
        )
        return cls(
            vocab=vocab,
            embedding=embedding,
            strategy=settings.data.strategy,
            data_config=settings.data,
            text_len=settings.model.text_len,
        )

    @classmethod
    def from_checkpoint_header(cls, settings: AppSettings, header: dict[str, Any]) -> "Conditioning":
        tokens = header.get("vocab")
        if not isinstance(tokens, list) or not tokens:
            raise CheckpointException("Model checkpoint carries no vocabulary; it cannot condition on dialogs.")
        vocab = Vocabulary(
            tokens=tuple(str(t) for t in tokens),
            speaker_tokens_enabled=bool(header.get("speaker_tokens_enabled", True)),
        )
        return cls.from_vocab(settings, vocab)

    def header_extras(self) -> dict[str, Any]:
        return {"vocab": list(self.vocab.tokens), "speaker_tokens_enabled": self.vocab.speaker_tokens_enabled}

    def tokenize(self, dialogs: Sequence[Dialog]) -> list[TokenSeq]:
        max_tokens = min(self.data_config.max_tokens, self.text_len)
        return [
            tokenize_dialog(d, self.vocab, self.strategy, keep=self.data_config.keep, max_tokens=max_tokens)
            for d in dialogs
        ]

    def embed(self, dialogs: Sequence[Dialog]) -> torch.Tensor:
        return embed_batch(self.tokenize(dialogs), self.embedding, max_tokens=self.text_len)


def generate_images(
    model: NoisePredictor, sched: NoiseSchedule, y_0: torch.Tensor, settings: AppSettings, seed: int
) -> torch.Tensor:
    """
    One image per conditioning row, sampled in batches of `sampling.batch_size`. Chain i always draws from the stream
    of (seed, i), so an image does not depend on the batch it lands in.
    """
    config = settings.sampling
    generators = chain_generators(seed, y_0.shape[0])
    outputs = []
    for start in range(0, y_0.shape[0], config.batch_size):
        batch_y = y_0[start : start + config.batch_size]
        batch_gens = generators[start : start + config.batch_size]
        if config.sampler == SamplerName.ANCESTRAL:
            outputs.append(sample_ancestral(model, sched, batch_y, batch_gens, sigma_mode=config.sigma_mode))
        else:
            outputs.append(
                sample_dpm_solver(
                    model,
                    sched,
                    batch_y,
                    steps=config.steps,
                    order=config.order,
                    discretization=config.discretization,
                    generator=batch_gens,
                )
            )
        _LOGGER.debug(f"Sampled {min(start + config.batch_size, y_0.shape[0])}/{y_0.shape[0]} images")
    return torch.cat(outputs).clamp(-1.0, 1.0)


def show_config_action(app_settings: AppSettings) -> dict[str, Any]:
    """Resolved, JSON-ready config."""
    return json.loads(json.dumps(app_settings.snapshot()))
