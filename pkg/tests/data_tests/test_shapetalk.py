import re

import pytest
import torch

from dialdiff.data.shapetalk import (
    COLOR_VALUES,
    ShapeTalkSample,
    gen_shapetalk,
    render_scene,
    sample_scene_images,
    shapetalk_sample,
)
from dialdiff.models.scene import NUM_SCENE_CLASSES, SceneSpec
from dialdiff.models.types import Color, Position, Shape, Split

_POSITION_WORDS = ("middle", "corner")


def test_generation_is_deterministic(shapetalk_train: list[ShapeTalkSample]) -> None:
    again = gen_shapetalk(12, 7, Split.TRAIN)
    for a, b in zip(shapetalk_train, again, strict=True):
        assert a.dialog == b.dialog
        assert torch.equal(a.image, b.image)


def test_prefix_is_stable(shapetalk_train: list[ShapeTalkSample]) -> None:
    shorter = gen_shapetalk(5, 7, Split.TRAIN)
    assert [s.dialog for s in shorter] == [s.dialog for s in shapetalk_train[:5]]
    assert shapetalk_sample(3, 7, Split.TRAIN).dialog == shapetalk_train[3].dialog


def test_splits_and_seeds_differ(shapetalk_train: list[ShapeTalkSample]) -> None:
    test_split = gen_shapetalk(12, 7, Split.TEST)
    assert {s.dialog.sample_id for s in test_split}.isdisjoint({s.dialog.sample_id for s in shapetalk_train})
    other_seed = gen_shapetalk(12, 8, Split.TRAIN)
    assert [s.dialog.turns for s in other_seed] != [s.dialog.turns for s in shapetalk_train]


def test_dialog_structure(shapetalk_train: list[ShapeTalkSample]) -> None:
    for sample in shapetalk_train:
        dialog = sample.dialog
        assert 3 <= dialog.num_turns <= 6
        speakers = [turn.speaker_id for turn in dialog.turns]
        assert all(a != b for a, b in zip(speakers, speakers[1:], strict=False))
        assert dialog.category == sample.scene.shape.value
        assert dialog.color == sample.scene.color.value
        assert dialog.image_ref == f"images/{dialog.sample_id}.png"
        # the opening turn is small talk
        opening = dialog.turns[0].text
        assert sample.scene.shape.value not in opening
        assert sample.scene.color.value not in opening


def test_no_single_turn_describes_the_scene(shapetalk_train: list[ShapeTalkSample]) -> None:
    for sample in shapetalk_train:
        scene = sample.scene
        texts = [turn.text for turn in sample.dialog.turns]
        assert any(scene.shape.value in t for t in texts)
        assert any(scene.color.value in t for t in texts)
        assert any(word in t for t in texts for word in _POSITION_WORDS)
        for text in texts:
            has_all = scene.shape.value in text and scene.color.value in text
            assert not (has_all and any(word in text for word in _POSITION_WORDS))


def test_red_circle_in_the_center() -> None:
    image = render_scene(SceneSpec(shape=Shape.CIRCLE, color=Color.RED, position=Position.CENTER))
    assert image.shape == (16, 16, 3)
    assert image[7, 7].tolist() == [1.0, -1.0, -1.0]
    assert image[0, 0].tolist() == [-1.0, -1.0, -1.0]


def test_center_square_covers_36_pixels() -> None:
    image = render_scene(SceneSpec(shape=Shape.SQUARE, color=Color.BLUE, position=Position.CENTER))
    painted = (image == torch.tensor(COLOR_VALUES[Color.BLUE], dtype=torch.float64)).all(dim=2)
    assert int(painted.sum().item()) == 36


def test_jitter_shifts_the_render() -> None:
    spec = SceneSpec(shape=Shape.TRIANGLE, color=Color.YELLOW, position=Position.CENTER)
    shifted = render_scene(spec, jitter=(1, -1))
    assert torch.equal(shifted, torch.roll(render_scene(spec), shifts=(1, -1), dims=(0, 1)))


@pytest.mark.parametrize("n", [0, -3])
def test_gen_shapetalk_requires_samples(n: int) -> None:
    with pytest.raises(ValueError, match=re.escape("n must be >= 1")):
        _ = gen_shapetalk(n, 7)


def test_sample_scene_images_offsets() -> None:
    images, labels = sample_scene_images(6, seed=3)
    tail_images, tail_labels = sample_scene_images(4, seed=3, start=2)
    assert images.shape == (6, 16, 16, 3)
    assert torch.equal(images[2:], tail_images)
    assert torch.equal(labels[2:], tail_labels)


def test_attributes_cover_every_class() -> None:
    samples = gen_shapetalk(200, 11)
    assert {s.scene.class_index for s in samples} == set(range(NUM_SCENE_CLASSES))
    assert {s.scene.position for s in samples} == set(Position)
