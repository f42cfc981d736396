from enum import StrEnum


class ConcatStrategy(StrEnum):
    """
    Rule for merging dialog turns into one conditioning string. The values are the names accepted by `--strategy`.

    HASH_PREFIX:    `#turn1#turn2`
    SPACE_JOIN:     `turn1 turn2`
    SPEAKER_TOKEN:  `[PER1] turn1 [PER2] turn2`
    SPEAKER_LETTER: `A: turn1 B: turn2`
    """

    HASH_PREFIX = "hash"
    SPACE_JOIN = "space"
    SPEAKER_TOKEN = "per"
    SPEAKER_LETTER = "letter"


class KeepMode(StrEnum):
    """Which end of an over-long token sequence survives truncation."""

    HEAD = "head"
    TAIL = "tail"


class SamplerName(StrEnum):
    ANCESTRAL = "ancestral"
    DPM = "dpm"


class SigmaMode(StrEnum):
    """
    Per-step noise scale of the ancestral sampler.

    BETA:       sigma_t^2 = beta_t
    BETA_TILDE: sigma_t^2 = beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)
    ZERO:       sigma_t = 0, taken along the marginal-preserving deterministic path.
    """

    BETA = "beta"
    BETA_TILDE = "beta_tilde"
    ZERO = "zero"


class Discretization(StrEnum):
    """Node placement of the DPM-Solver grid."""

    LOGSNR = "logsnr"
    TIME = "time"


class ModelPreset(StrEnum):
    """Backbone sizes; `deep` mirrors the deeper U-ViT variant next to the default small one."""

    SMALL = "small"
    DEEP = "deep"
    CUSTOM = "custom"


class Shape(StrEnum):
    CIRCLE = "circle"
    SQUARE = "square"
    TRIANGLE = "triangle"


class Color(StrEnum):
    RED = "red"
    GREEN = "green"
    BLUE = "blue"
    YELLOW = "yellow"


class Position(StrEnum):
    CENTER = "center"
    CORNER = "corner"


class Split(StrEnum):
    TRAIN = "train"
    TEST = "test"
