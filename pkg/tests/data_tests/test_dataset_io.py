import json
import re
from pathlib import Path

import pytest
import torch
from pydantic import ValidationError

from dialdiff.data.dataset_io import (
    SplitManifest,
    read_image_set,
    read_split_manifest,
    write_dataset,
    write_image_set,
)
from dialdiff.data.shapetalk import ShapeTalkSample, gen_shapetalk
from dialdiff.models.types import Split
from dialdiff.utils.exceptions import DatasetFormatException


def test_dataset_round_trip(tmp_path: Path, shapetalk_train: list[ShapeTalkSample]) -> None:
    train = shapetalk_train[:4]
    test = gen_shapetalk(2, 7, Split.TEST)
    manifest = write_dataset(
        tmp_path,
        {
            Split.TRAIN: ([s.dialog for s in train], [s.image for s in train]),
            Split.TEST: ([s.dialog for s in test], [s.image for s in test]),
        },
        seed=7,
    )
    assert manifest.splits[Split.TRAIN] == [s.dialog.sample_id for s in train]
    assert read_split_manifest(tmp_path) == manifest

    loaded = read_image_set(tmp_path / "train")
    assert loaded.dialogs == [s.dialog for s in train]
    assert torch.equal(loaded.images, torch.stack([s.image for s in train]))
    assert loaded.sample_ids == manifest.splits[Split.TRAIN]
    assert loaded.categories == [s.scene.shape.value for s in train]
    assert loaded.colors == [s.scene.color.value for s in train]
    assert (tmp_path / "test" / "images" / "test-00001.png").is_file()


def test_read_image_set_accepts_the_index_file(tmp_path: Path, shapetalk_train: list[ShapeTalkSample]) -> None:
    index_path = write_image_set(tmp_path / "set", [shapetalk_train[0].dialog], [shapetalk_train[0].image])
    assert read_image_set(index_path).sample_ids == [shapetalk_train[0].dialog.sample_id]


def test_write_image_set_requires_one_image_per_dialog(
    tmp_path: Path, shapetalk_train: list[ShapeTalkSample]
) -> None:
    with pytest.raises(ValueError, match=re.escape("Got 2 dialogs for 1 images.")):
        _ = write_image_set(tmp_path, [s.dialog for s in shapetalk_train[:2]], [shapetalk_train[0].image])


def test_split_manifest_rejects_overlap() -> None:
    with pytest.raises(ValidationError, match=re.escape("Splits share sample ids")):
        _ = SplitManifest(seed=0, splits={Split.TRAIN: ["a", "b"], Split.TEST: ["b"]})


def test_missing_or_invalid_files_raise(tmp_path: Path) -> None:
    with pytest.raises(DatasetFormatException, match=re.escape("No split manifest")):
        _ = read_split_manifest(tmp_path)
    (tmp_path / "splits.json").write_text(json.dumps({"seed": 0, "splits": {"train": ["a"], "test": ["a"]}}))
    with pytest.raises(DatasetFormatException, match=re.escape("Invalid split manifest")):
        _ = read_split_manifest(tmp_path)
    with pytest.raises(DatasetFormatException, match=re.escape("No image set index")):
        _ = read_image_set(tmp_path / "train")


def test_image_set_with_only_missing_images_raises(tmp_path: Path) -> None:
    (tmp_path / "index.jsonl").write_text(json.dumps({"turns": [{"speaker": 0, "text": "hi"}], "image": "x.png"}) + "\n")
    with pytest.raises(DatasetFormatException, match=re.escape("holds no usable records")):
        _ = read_image_set(tmp_path)
