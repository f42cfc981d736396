from dialdiff.models.dialog_models import Dialog, DialogRecord, Turn, TurnRecord
from dialdiff.models.scene import NUM_SCENE_CLASSES, SCENE_CLASSES, SceneSpec
from dialdiff.models.types import (
    Color,
    ConcatStrategy,
    Discretization,
    KeepMode,
    ModelPreset,
    Position,
    SamplerName,
    Shape,
    SigmaMode,
    Split,
)

__all__ = [
    "NUM_SCENE_CLASSES",
    "SCENE_CLASSES",
    "Color",
    "ConcatStrategy",
    "Dialog",
    "DialogRecord",
    "Discretization",
    "KeepMode",
    "ModelPreset",
    "Position",
    "SamplerName",
    "SceneSpec",
    "Shape",
    "SigmaMode",
    "Split",
    "Turn",
    "TurnRecord",
]
