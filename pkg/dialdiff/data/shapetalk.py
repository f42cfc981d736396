"""
ShapeTalk-lite: a deterministic synthetic corpus of short templated dialogs, each paired with a rendered 16x16 image of
the single shape the dialog talks about. Small talk leads every dialog and the scene attributes are spread over at
least two later turns, so no single turn describes the image.
"""

import logging
from typing import NamedTuple

import numpy as np
import torch

from dialdiff.models.dialog_models import Dialog, Turn
from dialdiff.models.scene import SceneSpec
from dialdiff.models.types import Color, Position, Shape, Split
from dialdiff.utils.constants import IMAGE_CHANNELS, IMAGE_SIZE
from dialdiff.utils.seeding import numpy_rng

_LOGGER = logging.getLogger(__name__)

BACKGROUND = -1.0
COLOR_VALUES: dict[Color, tuple[float, float, float]] = {
    Color.RED: (1.0, -1.0, -1.0),
    Color.GREEN: (-1.0, 1.0, -1.0),
    Color.BLUE: (-1.0, -1.0, 1.0),
    Color.YELLOW: (1.0, 1.0, -1.0),
}
# (row, col) of the shape centre in pixel coordinates, pixel centres at k + 0.5.
POSITION_CENTERS: dict[Position, tuple[float, float]] = {
    Position.CENTER: (8.0, 8.0),
    Position.CORNER: (4.5, 4.5),
}
_CIRCLE_RADIUS = 3.6
_SQUARE_HALF = 3.0
_TRIANGLE_TOP = 3.5
_TRIANGLE_BOTTOM = 3.0
_TRIANGLE_HALF_BASE = 3.5

_SPLIT_STREAMS: dict[Split, int] = {Split.TRAIN: 0, Split.TEST: 1}
_CLASSIFIER_STREAM = 2

_SMALL_TALK = (
    "hi there, how was your weekend?",
    "pretty relaxed, i mostly stayed at home.",
    "hey! did you finish the project you mentioned?",
    "almost, just a few details left.",
    "good morning, the weather is lovely today.",
    "yes, i went for a long walk earlier.",
    "i just got back from the market.",
    "oh nice, anything interesting there?",
)
_SHAPE_PHRASES = ("i drew a {shape} yesterday", "the picture shows a {shape}", "there is just one {shape} in it")
_COLOR_PHRASES = ("it is painted {color}", "the color is {color}", "i used {color} for it")
_POSITION_PHRASES = ("it sits in the {position}", "you can find it in the {position}", "i placed it in the {position}")
_POSITION_WORDS: dict[Position, str] = {Position.CENTER: "middle", Position.CORNER: "top left corner"}
_CLOSERS = ("can you send it over?", "sounds great, show me!", "i would love to see it.")


class ShapeTalkSample(NamedTuple):
    dialog: Dialog
    image: torch.Tensor
    scene: SceneSpec


def render_scene(spec: SceneSpec, jitter: tuple[int, int] = (0, 0)) -> torch.Tensor:
    """Pure renderer: one flat-colored shape on a black background, shifted by `jitter` = (rows, cols) pixels."""
    cy, cx = POSITION_CENTERS[spec.position]
    cy += jitter[0]
    cx += jitter[1]
    yy, xx = np.mgrid[0:IMAGE_SIZE, 0:IMAGE_SIZE] + 0.5
    match spec.shape:
        case Shape.CIRCLE:
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= _CIRCLE_RADIUS**2
        case Shape.SQUARE:
            mask = (np.abs(yy - cy) <= _SQUARE_HALF) & (np.abs(xx - cx) <= _SQUARE_HALF)
        case Shape.TRIANGLE:
            top = cy - _TRIANGLE_TOP
            half_width = (yy - top) / (_TRIANGLE_TOP + _TRIANGLE_BOTTOM) * _TRIANGLE_HALF_BASE
            mask = (yy >= top) & (yy <= cy + _TRIANGLE_BOTTOM) & (np.abs(xx - cx) <= half_width)
    image = np.full((IMAGE_SIZE, IMAGE_SIZE, IMAGE_CHANNELS), BACKGROUND, dtype=np.float64)
    image[mask] = COLOR_VALUES[spec.color]
    return torch.from_numpy(image)


def _sample_scene(rng: np.random.Generator) -> tuple[SceneSpec, tuple[int, int]]:
    scene = SceneSpec(
        shape=list(Shape)[rng.integers(len(Shape))],
        color=list(Color)[rng.integers(len(Color))],
        position=list(Position)[rng.integers(len(Position))],
    )
    jitter = (int(rng.integers(-1, 2)), int(rng.integers(-1, 2)))
    return scene, jitter


def _attribute_turns(scene: SceneSpec, rng: np.random.Generator) -> list[str]:
    phrases = [
        str(rng.choice(_SHAPE_PHRASES)).format(shape=scene.shape.value),
        str(rng.choice(_COLOR_PHRASES)).format(color=scene.color.value),
        str(rng.choice(_POSITION_PHRASES)).format(position=_POSITION_WORDS[scene.position]),
    ]
    # Two or three attribute turns; the shape is always described first.
    if rng.integers(2) == 0:
        return [f"{phrase}." for phrase in phrases]
    cut = int(rng.integers(1, 3))
    return [", and ".join(phrases[:cut]) + ".", ", and ".join(phrases[cut:]) + "."]


def _dialog_turns(scene: SceneSpec, rng: np.random.Generator) -> list[str]:
    num_small_talk = int(rng.integers(1, 3))
    start = int(rng.integers(0, len(_SMALL_TALK) - 1))
    turns = list(_SMALL_TALK[start : start + num_small_talk])
    turns += _attribute_turns(scene, rng)
    if len(turns) < 6 and rng.integers(2) == 1:
        turns.append(str(rng.choice(_CLOSERS)))
    return turns


def shapetalk_sample(index: int, seed: int, split: Split = Split.TRAIN) -> ShapeTalkSample:
    """Sample `index` of the split; independent of how many samples are generated around it."""
    rng = numpy_rng(seed, _SPLIT_STREAMS[split], index)
    scene, jitter = _sample_scene(rng)
    first_speaker = int(rng.integers(2))
    turns = tuple(
        Turn(speaker_id=(first_speaker + k) % 2, text=text) for k, text in enumerate(_dialog_turns(scene, rng))
    )
    sample_id = f"{split.value}-{index:05d}"
    dialog = Dialog(
        sample_id=sample_id,
        turns=turns,
        image_ref=f"images/{sample_id}.png",
        category=scene.category,
        color=scene.color.value,
    )
    return ShapeTalkSample(dialog=dialog, image=render_scene(scene, jitter), scene=scene)


def gen_shapetalk(n: int, seed: int, split: Split = Split.TRAIN) -> list[ShapeTalkSample]:
    """The first `n` samples of the split; identical for identical (n, seed, split)."""
    if n < 1:
        raise ValueError(f"n must be >= 1. Got {n}")
    _LOGGER.debug(f"Generating {n} ShapeTalk-lite {split.value} samples with seed {seed}")
    return [shapetalk_sample(i, seed, split) for i in range(n)]


def sample_scene_images(n: int, seed: int, start: int = 0) -> tuple[torch.Tensor, torch.Tensor]:
    """
    Jittered renders of uniformly drawn scenes `start .. start + n - 1` and their (shape, color) class labels, the
    training material of the evaluation classifier. Disjoint index ranges give disjoint draws.
    """
    images, labels = [], []
    for i in range(start, start + n):
        scene, jitter = _sample_scene(numpy_rng(seed, _CLASSIFIER_STREAM, i))
        images.append(render_scene(scene, jitter))
        labels.append(scene.class_index)
    return torch.stack(images), torch.tensor(labels, dtype=torch.long)
