from dataclasses import dataclass
from itertools import product

from dialdiff.models.types import Color, Position, Shape


@dataclass(frozen=True)
class SceneSpec:
    """Attributes of one ShapeTalk-lite image. The sample's category is its shape."""

    shape: Shape
    color: Color
    position: Position

    @property
    def category(self) -> str:
        return self.shape.value

    @property
    def class_index(self) -> int:
        """Index of the (shape, color) pair among the evaluation classifier's classes."""
        return SCENE_CLASSES.index((self.shape, self.color))


SCENE_CLASSES: tuple[tuple[Shape, Color], ...] = tuple(product(Shape, Color))
NUM_SCENE_CLASSES: int = len(SCENE_CLASSES)


def class_color(class_index: int) -> Color:
    return SCENE_CLASSES[class_index][1]


def class_shape(class_index: int) -> Shape:
    return SCENE_CLASSES[class_index][0]
