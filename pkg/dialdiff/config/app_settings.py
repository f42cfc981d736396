import json
import logging
import os
from pathlib import Path
from typing import Any, Self

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic.json_schema import SkipJsonSchema
from pydantic_settings import BaseSettings, JsonConfigSettingsSource, SettingsConfigDict, YamlConfigSettingsSource

from dialdiff.models.field_validators import (
    InceptionSplits,
    NumTimesteps,
    SamplerSteps,
    TokenBudget,
    validate_adam_betas,
    validate_beta_range,
    validate_divisible,
)
from dialdiff.models.types import ConcatStrategy, Discretization, KeepMode, ModelPreset, SamplerName, SigmaMode
from dialdiff.utils.constants import DIALDIFF_CONFIG_ENVVAR, IMAGE_CHANNELS, IMAGE_SIZE, MAX_TOKENS, TEXT_EMBED_DIM
from dialdiff.utils.exceptions import AppConfigException

_LOGGER = logging.getLogger(__name__)

_PRESETS: dict[ModelPreset, dict[str, int]] = {
    ModelPreset.SMALL: {"dim": 64, "depth": 4, "heads": 4, "mlp_dim": 256},
    ModelPreset.DEEP: {"dim": 64, "depth": 6, "heads": 4, "mlp_dim": 256},
}


class ModelConfig(BaseModel):
    """Backbone settings defined in the dialdiff config at `model`."""

    model_config = ConfigDict(frozen=True, validate_default=True, extra="ignore", title="model")
    preset: ModelPreset = Field(default=ModelPreset.SMALL)
    image_size: int = Field(default=IMAGE_SIZE, ge=4, le=512)
    patch_size: int = Field(default=4, ge=1)
    channels: int = Field(default=IMAGE_CHANNELS, ge=1)
    dim: int = Field(default=64, ge=2)
    depth: int = Field(default=4, ge=1, le=32)
    heads: int = Field(default=4, ge=1)
    mlp_dim: int = Field(default=256, ge=1)
    text_len: int = Field(default=MAX_TOKENS, ge=1, le=MAX_TOKENS)
    text_dim: int = Field(default=TEXT_EMBED_DIM, ge=1)
    long_skip: bool = Field(default=True)
    init_std: float = Field(default=0.02, gt=0.0)
    # Seed of the frozen text embedding table + projection; independent of the training seed.
    embedding_seed: int = Field(default=0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _apply_preset(cls, data: Any) -> Any:
        """A named preset fills the backbone sizes the config leaves out; sizes set explicitly always win."""
        if isinstance(data, dict):
            preset = ModelPreset(data.get("preset", ModelPreset.SMALL))
            if preset != ModelPreset.CUSTOM:
                return {**_PRESETS[preset], **data}
        return data

    @model_validator(mode="after")
    def post_model_validator(self) -> Self:
        validate_divisible(self.image_size, self.patch_size)
        if self.dim % self.heads != 0:
            raise ValueError(f"dim ({self.dim}) must be divisible by heads ({self.heads}).")
        return self

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return (self.image_size, self.image_size, self.channels)

    @property
    def text_shape(self) -> tuple[int, int]:
        return (self.text_len, self.text_dim)


class ScheduleConfig(BaseModel):
    """Linear beta schedule settings at `schedule`. Standard DDPM values; the desk config scales them for T = 200."""

    model_config = ConfigDict(frozen=True, validate_default=True, extra="ignore", title="schedule")
    num_timesteps: int = Field(default=NumTimesteps.DEFAULT.value, ge=NumTimesteps.MIN.value, le=NumTimesteps.MAX.value)
    beta_start: float = Field(default=1e-4)
    beta_end: float = Field(default=0.02)

    @model_validator(mode="after")
    def post_model_validator(self) -> Self:
        validate_beta_range(self.beta_start, self.beta_end)
        return self


class TrainConfig(BaseModel):
    """
    Optimisation settings at `train`. Class defaults carry the fine-tuning recipe (lr 3e-5, weight decay 0.03,
    betas (0.9, 0.9)); the desk config scales steps and warmup down and raises the learning rate for from-scratch
    training.
    """

    model_config = ConfigDict(frozen=True, validate_default=True, extra="ignore", title="train")
    learning_rate: float = Field(default=3e-5, gt=0.0)
    weight_decay: float = Field(default=0.03, ge=0.0)
    adam_betas: tuple[float, float] = Field(default=(0.9, 0.9))
    adam_eps: float = Field(default=1e-8, gt=0.0)
    # Full-scale fine-tuning used 5,000 warm-up steps over 9,800 steps at batch 300.
    warmup_steps: int = Field(default=300, ge=0)
    total_steps: int = Field(default=3000, ge=0)
    batch_size: int = Field(default=32, ge=1)
    seed: int = Field(default=0, ge=0)
    checkpoint_every: int = Field(default=500, ge=1)
    log_every: int = Field(default=50, ge=1)
    ema_decay: float = Field(default=0.99, ge=0.0, lt=1.0)

    @field_validator("adam_betas")
    @classmethod
    def _check_betas(cls, value: tuple[float, float]) -> tuple[float, float]:
        return validate_adam_betas(value)

    @model_validator(mode="after")
    def post_model_validator(self) -> Self:
        # A zero-step run (initial checkpoint only) never reaches the scheduler, so the default warm-up stays valid.
        if self.total_steps > 0 and self.warmup_steps > self.total_steps:
            raise ValueError(
                f"warmup_steps ({self.warmup_steps}) must not exceed total_steps ({self.total_steps})."
            )
        return self


class SamplingConfig(BaseModel):
    """Sampler settings at `sampling`."""

    model_config = ConfigDict(frozen=True, validate_default=True, extra="ignore", title="sampling")
    sampler: SamplerName = Field(default=SamplerName.DPM)
    steps: int = Field(default=SamplerSteps.DEFAULT.value, ge=SamplerSteps.MIN.value, le=SamplerSteps.MAX.value)
    order: int = Field(default=2, ge=1, le=2)
    discretization: Discretization = Field(default=Discretization.LOGSNR)
    sigma_mode: SigmaMode = Field(default=SigmaMode.BETA)
    seed: int = Field(default=0, ge=0)
    batch_size: int = Field(default=64, ge=1)


class DataConfig(BaseModel):
    """Dataset + preprocessing settings at `data`."""

    model_config = ConfigDict(frozen=True, validate_default=True, extra="ignore", title="data")
    # Either `shapetalk` (generated on the fly) or a path to a PhotoChat-format JSONL file.
    dataset: str = Field(default="shapetalk", min_length=1)
    test_dataset: str | None = Field(default=None)
    n_train: int = Field(default=2000, ge=1)
    n_test: int = Field(default=200, ge=1)
    data_seed: int = Field(default=7, ge=0)
    strategy: ConcatStrategy = Field(default=ConcatStrategy.HASH_PREFIX)
    keep: KeepMode = Field(default=KeepMode.HEAD)
    max_tokens: int = Field(default=TokenBudget.DEFAULT.value, ge=TokenBudget.MIN.value, le=TokenBudget.MAX.value)
    speaker_tokens_in_vocab: bool = Field(default=True)
    max_vocab_size: int | None = Field(default=None, ge=8)


class EvalConfig(BaseModel):
    """Evaluation classifier + metric settings at `eval`."""

    model_config = ConfigDict(frozen=True, validate_default=True, extra="ignore", title="eval")
    is_splits: int = Field(
        default=InceptionSplits.DEFAULT.value, ge=InceptionSplits.MIN.value, le=InceptionSplits.MAX.value
    )
    feature_dim: int = Field(default=32, ge=2)
    classifier_steps: int = Field(default=600, ge=1)
    classifier_batch_size: int = Field(default=64, ge=1)
    classifier_lr: float = Field(default=2e-3, gt=0.0)
    classifier_seed: int = Field(default=0, ge=0)
    classifier_train_samples: int = Field(default=2400, ge=2)
    classifier_holdout_samples: int = Field(default=600, ge=2)
    min_accuracy: float = Field(default=0.95, ge=0.0, le=1.0)


class AppSettings(BaseSettings):
    """Pydantic settings class encapsulating a `dialdiff` YAML or JSON config."""

    model_config = SettingsConfigDict(
        frozen=True, extra="ignore", title="config", env_prefix="DIALDIFF_", env_nested_delimiter="__"
    )
    src_filepath: SkipJsonSchema[Path | None] = None
    log_level: str = Field(default="INFO")
    model: ModelConfig = Field(title="model", default_factory=ModelConfig)
    schedule: ScheduleConfig = Field(title="schedule", default_factory=ScheduleConfig)
    train: TrainConfig = Field(title="train", default_factory=TrainConfig)
    sampling: SamplingConfig = Field(title="sampling", default_factory=SamplingConfig)
    data: DataConfig = Field(title="data", default_factory=DataConfig)
    eval: EvalConfig = Field(title="eval", default_factory=EvalConfig)

    def with_overrides(
        self,
        seed: int | None = None,
        strategy: ConcatStrategy | None = None,
        keep: KeepMode | None = None,
        sampler: SamplerName | None = None,
        steps: int | None = None,
    ) -> "AppSettings":
        """
        Returns a copy of these settings with the provided CLI overrides merged in. Returns `self` unchanged when no
        override is set. `seed` drives both training and sampling seeds.
        """
        if all(v is None for v in (seed, strategy, keep, sampler, steps)):
            return self
        train_updates = {"seed": seed}
        data_updates = {"strategy": strategy, "keep": keep}
        sampling_updates = {"seed": seed, "sampler": sampler, "steps": steps}
        train = self.train.model_copy(update={k: v for k, v in train_updates.items() if v is not None})
        data = self.data.model_copy(update={k: v for k, v in data_updates.items() if v is not None})
        sampling = self.sampling.model_copy(update={k: v for k, v in sampling_updates.items() if v is not None})
        return self.model_copy(update={"train": train, "data": data, "sampling": sampling})

    def snapshot(self) -> dict[str, Any]:
        """JSON-ready config snapshot, as echoed into run manifests."""
        return self.model_dump(mode="json", exclude={"src_filepath"})


def get_app_settings(src_filepath: Path | None = None) -> AppSettings:
    """
    Returns the read-only `dialdiff` settings from a YAML config, a JSON config, or a run manifest JSON (whose `config`
    snapshot is used). Falls back to `$DIALDIFF_CONFIG`, then to the built-in defaults.
    """
    if not src_filepath:
        env_path = os.getenv(DIALDIFF_CONFIG_ENVVAR)
        src_filepath = Path(env_path) if env_path else None
    settings_data = _get_settings_data(src_filepath=src_filepath) if src_filepath else {}
    try:
        app_settings = AppSettings(**settings_data)
    except ValidationError as ve:
        formatted_validation_errors = json.dumps(json.loads(ve.json()), indent=2)
        _LOGGER.error(f"Invalid app config. Validation errors: {formatted_validation_errors}")
        raise AppConfigException(f"Invalid dialdiff config settings.\n\n{formatted_validation_errors}") from ve
    return app_settings


def settings_from_snapshot(snapshot: dict[str, Any]) -> AppSettings:
    """Rebuilds settings from a manifest / checkpoint config snapshot."""
    try:
        return AppSettings(**snapshot)
    except ValidationError as ve:
        raise AppConfigException(f"Invalid config snapshot: {ve}") from ve


def _get_settings_data(src_filepath: Path) -> dict[str, Any]:
    if not src_filepath.is_file():
        raise AppConfigException(f"Config file not found: {src_filepath}")
    data: dict[str, Any]
    if src_filepath.suffix.lower() == ".json":
        raw = json.loads(src_filepath.read_text(encoding="utf-8"))
        # A run manifest carries the full config under `config`.
        if isinstance(raw, dict) and "manifest_version" in raw and isinstance(raw.get("config"), dict):
            data = dict(raw["config"])
        else:
            data = JsonConfigSettingsSource(AppSettings, json_file=src_filepath)()
    else:
        data = YamlConfigSettingsSource(AppSettings, yaml_file=src_filepath)()
    data["src_filepath"] = src_filepath
    return data
