import json
import re
from pathlib import Path

import pytest
from pydantic import ValidationError

from dialdiff.config.app_settings import (
    AppSettings,
    ModelConfig,
    ScheduleConfig,
    TrainConfig,
    get_app_settings,
    settings_from_snapshot,
)
from dialdiff.models.types import ConcatStrategy, KeepMode, ModelPreset, SamplerName
from dialdiff.utils.constants import DIALDIFF_CONFIG_ENVVAR
from dialdiff.utils.exceptions import AppConfigException
from tests.conftest import CONFIGS_DIR_PATH

_INIT_CONF_FILEPATH = CONFIGS_DIR_PATH / "init_conf.yaml"
_DESK_CONF_FILEPATH = CONFIGS_DIR_PATH / "desk.json"


def test_get_app_settings_from_init_conf() -> None:
    actual = get_app_settings(src_filepath=_INIT_CONF_FILEPATH)
    assert isinstance(actual, AppSettings)
    assert actual.src_filepath == _INIT_CONF_FILEPATH
    assert actual.schedule.num_timesteps == 1000
    assert actual.train.adam_betas == (0.9, 0.9)


def test_get_app_settings_from_desk_json() -> None:
    actual = get_app_settings(src_filepath=_DESK_CONF_FILEPATH)
    assert actual.schedule.num_timesteps == 200
    assert actual.train.learning_rate == 0.0005
    assert actual.data.strategy == ConcatStrategy.HASH_PREFIX


def test_get_app_settings_defaults_without_a_file() -> None:
    actual = get_app_settings()
    assert actual.src_filepath is None
    assert actual == AppSettings()


def test_get_app_settings_reads_env_var_path(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv(DIALDIFF_CONFIG_ENVVAR, str(_DESK_CONF_FILEPATH))
    assert get_app_settings().schedule.num_timesteps == 200


def test_get_app_settings_from_run_manifest(tmp_path: Path, tiny_settings: AppSettings) -> None:
    """A run manifest's `config` snapshot reproduces the settings the run was made with."""
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(
        json.dumps({"manifest_version": 1, "command": "train", "seed": 0, "config": tiny_settings.snapshot()})
    )
    actual = get_app_settings(src_filepath=manifest_path)
    assert actual.snapshot() == tiny_settings.snapshot()


@pytest.mark.parametrize(
    "yaml_body",
    [
        "schedule:\n  beta_start: 0.5\n  beta_end: 0.1\n",  # case 1: decreasing betas
        "train:\n  warmup_steps: 10\n  total_steps: 5\n",  # case 2: warmup longer than training
        "model:\n  preset: custom\n  dim: 10\n  heads: 4\n",  # case 3: dim not divisible by heads
        "data:\n  max_tokens: 78\n",  # case 4: token budget above the encoder's limit
        "sampling:\n  sampler: euler\n",  # case 5: unknown sampler
    ],
)
def test_get_app_settings_invalid_config_raises(tmp_path: Path, yaml_body: str) -> None:
    config_path = tmp_path / "bad.yaml"
    config_path.write_text(yaml_body)
    with pytest.raises(AppConfigException, match=re.escape("Invalid dialdiff config settings.")):
        _ = get_app_settings(src_filepath=config_path)


def test_get_app_settings_missing_file_raises(tmp_path: Path) -> None:
    with pytest.raises(AppConfigException, match=re.escape("Config file not found")):
        _ = get_app_settings(src_filepath=tmp_path / "nope.yaml")


def test_settings_from_snapshot_invalid_raises() -> None:
    with pytest.raises(AppConfigException):
        _ = settings_from_snapshot({"schedule": {"num_timesteps": 0}})


@pytest.mark.parametrize(
    "preset, expected_depth",
    [
        (ModelPreset.SMALL, 4),  # case 1: default preset
        (ModelPreset.DEEP, 6),  # case 2: deeper variant
    ],
)
def test_model_presets_fill_missing_dims(preset: ModelPreset, expected_depth: int) -> None:
    actual = ModelConfig(preset=preset)
    assert actual.depth == expected_depth
    assert (actual.dim, actual.heads, actual.mlp_dim) == (64, 4, 256)


@pytest.mark.parametrize(
    "overrides",
    [
        {"dim": 32},  # case 1: width only
        {"depth": 2, "mlp_dim": 64},  # case 2: depth and feed-forward width
    ],
)
@pytest.mark.parametrize("preset", [ModelPreset.SMALL, ModelPreset.DEEP])
def test_explicit_dims_win_over_the_preset(preset: ModelPreset, overrides: dict[str, int]) -> None:
    actual = ModelConfig(preset=preset, **overrides)
    for name, value in overrides.items():
        assert getattr(actual, name) == value


def test_explicit_dims_from_a_config_file(tmp_path: Path) -> None:
    config_path = tmp_path / "dims.yaml"
    config_path.write_text("model:\n  dim: 32\n")
    model = get_app_settings(src_filepath=config_path).model
    assert (model.preset, model.dim, model.depth) == (ModelPreset.SMALL, 32, 4)


def test_custom_preset_keeps_dims(tiny_model_config: ModelConfig) -> None:
    assert tiny_model_config.dim == 8
    assert tiny_model_config.depth == 2
    assert tiny_model_config.image_shape == (16, 16, 3)
    assert tiny_model_config.text_shape == (5, 4)


def test_model_config_patch_size_must_divide_image() -> None:
    with pytest.raises(ValidationError):
        _ = ModelConfig(preset=ModelPreset.CUSTOM, patch_size=5)


def test_schedule_and_train_config_validation() -> None:
    with pytest.raises(ValidationError):
        _ = ScheduleConfig(beta_start=0.0, beta_end=0.02)
    with pytest.raises(ValidationError):
        _ = TrainConfig(adam_betas=(1.0, 0.9))


@pytest.mark.parametrize(
    "total_steps, warmup_steps",
    [
        (0, 300),  # case 1: zero-step run keeps the default warm-up
        (0, 0),  # case 2: zero-step run without warm-up
        (300, 300),  # case 3: warm-up spanning the whole run
    ],
)
def test_train_config_accepts_warmup(total_steps: int, warmup_steps: int) -> None:
    actual = TrainConfig(total_steps=total_steps, warmup_steps=warmup_steps)
    assert (actual.total_steps, actual.warmup_steps) == (total_steps, warmup_steps)


def test_zero_step_config_file_keeps_default_warmup(tmp_path: Path) -> None:
    config_path = tmp_path / "zero.yaml"
    config_path.write_text("train:\n  total_steps: 0\n")
    train = get_app_settings(src_filepath=config_path).train
    assert (train.total_steps, train.warmup_steps) == (0, 300)


def test_with_overrides_none_returns_self(tiny_settings: AppSettings) -> None:
    assert tiny_settings.with_overrides() is tiny_settings


def test_with_overrides_applies_all_fields(tiny_settings: AppSettings) -> None:
    merged = tiny_settings.with_overrides(
        seed=11, strategy=ConcatStrategy.SPEAKER_TOKEN, keep=KeepMode.TAIL, sampler=SamplerName.ANCESTRAL, steps=7
    )
    assert merged is not tiny_settings
    assert merged.train.seed == 11
    assert merged.sampling.seed == 11
    assert merged.data.strategy == ConcatStrategy.SPEAKER_TOKEN
    assert merged.data.keep == KeepMode.TAIL
    assert merged.sampling.sampler == SamplerName.ANCESTRAL
    assert merged.sampling.steps == 7
    # untouched sections stay as configured
    assert merged.model == tiny_settings.model
    assert merged.train.total_steps == tiny_settings.train.total_steps


def test_snapshot_is_json_ready_and_round_trips(tiny_settings: AppSettings) -> None:
    snapshot = tiny_settings.snapshot()
    assert "src_filepath" not in snapshot
    assert json.loads(json.dumps(snapshot)) == snapshot
    assert settings_from_snapshot(snapshot) == tiny_settings
