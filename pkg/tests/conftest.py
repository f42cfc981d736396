import json
import os
from pathlib import Path
from typing import Any

_REPO_ROOT = Path(__file__).resolve().parent.parent
os.environ.setdefault("APP_DIR", str(_REPO_ROOT))

import pytest

from dialdiff.config.app_settings import AppSettings, ModelConfig
from dialdiff.data.shapetalk import ShapeTalkSample, gen_shapetalk
from dialdiff.diffusion.schedule import NoiseSchedule, make_schedule
from dialdiff.models.dialog_models import Dialog, Turn
from dialdiff.models.types import ModelPreset, Split
from dialdiff.utils.constants import DIALDIFF_CONFIG_ENVVAR

CONFIGS_DIR_PATH = _REPO_ROOT / "dialdiff" / "config"

# A backbone small enough for finite differences and multi-step training runs inside unit tests.
TINY_MODEL: dict[str, Any] = {
    "preset": ModelPreset.CUSTOM.value,
    "patch_size": 8,
    "dim": 8,
    "depth": 2,
    "heads": 2,
    "mlp_dim": 16,
    "text_len": 5,
    "text_dim": 4,
}
TINY_SETTINGS: dict[str, Any] = {
    "model": TINY_MODEL,
    "schedule": {"num_timesteps": 20, "beta_start": 0.001, "beta_end": 0.2},
    "train": {
        "learning_rate": 0.001,
        "weight_decay": 0.03,
        "warmup_steps": 1,
        "total_steps": 4,
        "batch_size": 4,
        "seed": 0,
        "checkpoint_every": 2,
        "log_every": 1,
    },
    "sampling": {"sampler": "dpm", "steps": 3, "batch_size": 4, "seed": 0},
    "data": {"dataset": "shapetalk", "n_train": 12, "n_test": 6, "data_seed": 7},
    "eval": {
        "is_splits": 2,
        "feature_dim": 8,
        "classifier_steps": 5,
        "classifier_batch_size": 8,
        "classifier_train_samples": 24,
        "classifier_holdout_samples": 8,
        "min_accuracy": 0.0,
    },
}


# boilerplate for marking tests which should only run with the `--slowtests` flag
# https://docs.pytest.org/en/latest/example/simple.html#control-skipping-of-tests-according-to-command-line-option
def pytest_addoption(parser):
    parser.addoption(
        "--slowtests", action="store_true", default=False, help="run slow tests in addition to standard tests"
    )


def pytest_collection_modifyitems(config, items):
    # `True` when `--slowtests` provided in cli: do not skip slow tests
    include_slow_tests = config.getoption("--slowtests")
    skip_slow = pytest.mark.skip(reason="--slowtests option required to run slow tests")
    for item in items:
        if "slow" in item.keywords and not include_slow_tests:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def clean_dialdiff_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """No test picks up a developer's config from the environment."""
    monkeypatch.delenv(DIALDIFF_CONFIG_ENVVAR, raising=False)


@pytest.fixture(scope="function")
def tiny_settings() -> AppSettings:
    return AppSettings(**TINY_SETTINGS)


@pytest.fixture(scope="function")
def tiny_model_config() -> ModelConfig:
    return ModelConfig(**TINY_MODEL)


@pytest.fixture(scope="function")
def tiny_config_filepath(tmp_path: Path) -> Path:
    path = tmp_path / "tiny_config.json"
    path.write_text(json.dumps(TINY_SETTINGS), encoding="utf-8")
    return path


@pytest.fixture(scope="function")
def default_schedule() -> NoiseSchedule:
    return make_schedule(1000, 1e-4, 0.02)


@pytest.fixture(scope="session")
def shapetalk_train() -> list[ShapeTalkSample]:
    return gen_shapetalk(12, 7, Split.TRAIN)


@pytest.fixture(scope="function")
def two_turn_dialog() -> Dialog:
    return Dialog(
        sample_id="d-1",
        turns=(Turn(speaker_id=0, text="hi there"), Turn(speaker_id=1, text="a red circle, in the middle")),
        image_ref="images/d-1.png",
        category="circle",
        color="red",
    )

