"""
Bounds tables and field validator definitions for the Pydantic models representing the `dialdiff` configuration.
For more on Pydantic field validators, see the link below:
https://docs.pydantic.dev/latest/concepts/validators/#field-validators
"""

from enum import IntEnum, unique


@unique
class NumTimesteps(IntEnum):
    """Bounds of the diffusion horizon T."""

    DEFAULT = 1000
    MIN = 1
    MAX = 4000


@unique
class SamplerSteps(IntEnum):
    """Bounds of the DPM-Solver step count (the ancestral sampler always walks all T steps)."""

    DEFAULT = 50
    MIN = 1
    MAX = 4000


@unique
class TokenBudget(IntEnum):
    """Bounds of the text token budget; the frozen text encoder caps it at 77."""

    DEFAULT = 77
    MIN = 1
    MAX = 77


@unique
class InceptionSplits(IntEnum):
    DEFAULT = 10
    MIN = 1
    MAX = 100


def validate_beta_range(beta_start: float, beta_end: float) -> None:
    """Validates `0 < beta_start <= beta_end < 1` for a linear noise schedule."""
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(f"betas must satisfy 0 < beta_start <= beta_end < 1. Got: ({beta_start}, {beta_end})")


def validate_adam_betas(value: tuple[float, float]) -> tuple[float, float]:
    """Validates the AdamW running coefficients `(beta_1, beta_2)`."""
    for beta in value:
        if not 0.0 <= beta < 1.0:
            raise ValueError(f"adam_betas entries must lie in [0, 1). Got: {value}")
    return value


def validate_divisible(image_size: int, patch_size: int) -> None:
    if image_size % patch_size != 0:
        raise ValueError(f"image_size ({image_size}) must be divisible by patch_size ({patch_size}).")
