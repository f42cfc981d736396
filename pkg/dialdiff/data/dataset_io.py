"""
On-disk image sets. A set is a directory holding `index.jsonl` (one PhotoChat-format record per image) and the image
files the records point at; a dataset is one set per split next to `splits.json`, which lists the sample ids of every
split and the generation seed.
"""

import json
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import torch
from pydantic import BaseModel, ConfigDict, model_validator

from dialdiff.data.image_codec import decode_image, encode_image
from dialdiff.data.photochat import load_photochat
from dialdiff.models.dialog_models import Dialog, DialogRecord
from dialdiff.models.types import Split
from dialdiff.utils.constants import INDEX_FILENAME, SPLIT_MANIFEST_FILENAME
from dialdiff.utils.exceptions import DatasetFormatException
from dialdiff.utils.parallel import parallel_map

_LOGGER = logging.getLogger(__name__)


class SplitManifest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    seed: int
    splits: dict[Split, list[str]]

    @model_validator(mode="after")
    def _splits_disjoint(self) -> "SplitManifest":
        seen: set[str] = set()
        for ids in self.splits.values():
            overlap = seen.intersection(ids)
            if overlap:
                raise ValueError(f"Splits share sample ids: {sorted(overlap)[:5]}")
            seen.update(ids)
        return self


@dataclass(frozen=True)
class ImageSet:
    """Decoded images [N, H, W, C] with the dialogs that describe them, in index order."""

    dialogs: list[Dialog]
    images: torch.Tensor

    @property
    def sample_ids(self) -> list[str]:
        return [d.sample_id for d in self.dialogs]

    @property
    def categories(self) -> list[str | None]:
        return [d.category for d in self.dialogs]

    @property
    def colors(self) -> list[str | None]:
        return [d.color for d in self.dialogs]


def write_image_set(set_dir: Path, dialogs: Sequence[Dialog], images: Sequence[torch.Tensor]) -> Path:
    """Writes every image at its dialog's `image_ref` (relative to `set_dir`) and the index; returns the index path."""
    if len(dialogs) != len(images):
        raise ValueError(f"Got {len(dialogs)} dialogs for {len(images)} images.")
    set_dir.mkdir(parents=True, exist_ok=True)
    pairs = list(zip(dialogs, images, strict=True))
    parallel_map(lambda pair: encode_image(pair[1], set_dir / pair[0].image_ref), pairs)
    index_path = set_dir / INDEX_FILENAME
    with index_path.open("w", encoding="utf-8") as f:
        for dialog in dialogs:
            f.write(DialogRecord.from_dialog(dialog).model_dump_json(exclude_none=True) + "\n")
    return index_path


def read_image_set(location: Path) -> ImageSet:
    """
    Loads an image set from a set directory or directly from a JSONL file. Records with a missing image are skipped
    by the loader and reported there.
    """
    index_path = location / INDEX_FILENAME if location.is_dir() else location
    if not index_path.is_file():
        raise DatasetFormatException(f"No image set index at {index_path}")
    corpus = load_photochat(index_path)
    if not corpus.dialogs:
        raise DatasetFormatException(f"Image set {location} holds no usable records.")
    images = parallel_map(lambda d: decode_image(corpus.image_path(d)), corpus.dialogs)
    return ImageSet(dialogs=corpus.dialogs, images=torch.stack(images))


def write_dataset(
    out_dir: Path, splits: Mapping[Split, tuple[Sequence[Dialog], Sequence[torch.Tensor]]], seed: int
) -> SplitManifest:
    """One image set per split under `out_dir/<split>/` plus the split manifest."""
    manifest = SplitManifest(
        seed=seed, splits={split: [d.sample_id for d in dialogs] for split, (dialogs, _) in splits.items()}
    )
    for split, (dialogs, images) in splits.items():
        write_image_set(out_dir / split.value, dialogs, images)
        _LOGGER.info(f"Wrote {len(dialogs)} {split.value} samples to {out_dir / split.value}")
    (out_dir / SPLIT_MANIFEST_FILENAME).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return manifest


def read_split_manifest(dataset_dir: Path) -> SplitManifest:
    path = dataset_dir / SPLIT_MANIFEST_FILENAME
    try:
        return SplitManifest.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except FileNotFoundError as ex:
        raise DatasetFormatException(f"No split manifest at {path}") from ex
    except (json.JSONDecodeError, ValueError) as ex:
        raise DatasetFormatException(f"Invalid split manifest {path}: {ex}") from ex
