import json
import logging
import os
import subprocess  # nosec B404
from datetime import UTC, datetime
from pathlib import Path
from types import TracebackType
from typing import Any, Self

from pydantic import BaseModel, ConfigDict, Field

from dialdiff.config.app_settings import AppSettings
from dialdiff.utils.constants import (
    CHECKPOINT_DIRNAME,
    FAILURE_FILENAME,
    FINAL_CHECKPOINT_FILENAME,
    LOCK_FILENAME,
    MANIFEST_FILENAME,
    METRICS_LOG_FILENAME,
)
from dialdiff.utils.exceptions import RunDirectoryException

_LOGGER = logging.getLogger(__name__)

MANIFEST_VERSION = 1


def _now_iso() -> str:
    return datetime.now(tz=UTC).isoformat(timespec="seconds")


def git_describe() -> str:
    """`git describe --always --dirty` of the working tree, or `unknown` outside a git checkout."""
    try:
        result = subprocess.run(  # nosec B603 B607
            ["git", "describe", "--always", "--dirty"], capture_output=True, text=True, timeout=5, check=False
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return result.stdout.strip() if result.returncode == 0 and result.stdout.strip() else "unknown"


class RunManifest(BaseModel):
    """
    Everything needed to reproduce a command: the config snapshot, the seed and the inputs. Written once into the run
    directory before any work starts and never rewritten.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")
    manifest_version: int = Field(default=MANIFEST_VERSION)
    command: str
    config: dict[str, Any]
    seed: int
    git_describe: str = Field(default_factory=git_describe)
    created_at: str = Field(default_factory=_now_iso)
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)

    @classmethod
    def for_command(
        cls,
        command: str,
        settings: AppSettings,
        seed: int,
        inputs: dict[str, str] | None = None,
        outputs: dict[str, str] | None = None,
    ) -> "RunManifest":
        return cls(command=command, config=settings.snapshot(), seed=seed, inputs=inputs or {}, outputs=outputs or {})


class RunDirectory:
    """
    Output directory of one command. Holds an exclusive `.lock` file while open so two writers never share a run
    directory; every artifact a command writes lives under `root`.
    """

    def __init__(self, root: Path):
        self._root = root
        self._locked = False

    @property
    def root(self) -> Path:
        return self._root

    @property
    def lock_path(self) -> Path:
        return self._root / LOCK_FILENAME

    @property
    def manifest_path(self) -> Path:
        return self._root / MANIFEST_FILENAME

    @property
    def metrics_path(self) -> Path:
        return self._root / METRICS_LOG_FILENAME

    @property
    def failure_path(self) -> Path:
        return self._root / FAILURE_FILENAME

    @property
    def checkpoints_dir(self) -> Path:
        return self._root / CHECKPOINT_DIRNAME

    @property
    def final_checkpoint_path(self) -> Path:
        return self.checkpoints_dir / FINAL_CHECKPOINT_FILENAME

    def checkpoint_path(self, step: int) -> Path:
        return self.checkpoints_dir / f"step_{step:07d}.ddif"

    def path(self, *parts: str) -> Path:
        return self._root.joinpath(*parts)

    def __enter__(self) -> Self:
        self._root.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as ex:
            raise RunDirectoryException(
                f"Run directory {self._root} is locked by another writer (remove {self.lock_path} if stale)."
            ) from ex
        with os.fdopen(fd, "w") as lock_file:
            lock_file.write(f"{os.getpid()}\n")
        self._locked = True
        _LOGGER.debug(f"Acquired run directory lock {self.lock_path}")
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        if self._locked:
            self.lock_path.unlink(missing_ok=True)
            self._locked = False
            _LOGGER.debug(f"Released run directory lock {self.lock_path}")

    def write_manifest(self, manifest: RunManifest) -> Path:
        if self.manifest_path.exists():
            raise RunDirectoryException(
                f"Run directory {self._root} already holds a run manifest; choose a fresh --out directory."
            )
        self.manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        _LOGGER.info(f"Wrote run manifest to {self.manifest_path}")
        return self.manifest_path

    def read_manifest(self) -> RunManifest:
        if not self.manifest_path.is_file():
            raise RunDirectoryException(f"No run manifest found in {self._root}")
        return RunManifest.model_validate_json(self.manifest_path.read_text(encoding="utf-8"))

    def write_failure(self, error: Exception, details: dict[str, Any] | None = None) -> Path:
        payload = {"error_type": type(error).__name__, "message": str(error), "recorded_at": _now_iso()}
        payload.update(details or {})
        self.failure_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        _LOGGER.error(f"Recorded failure in {self.failure_path}: {error}")
        return self.failure_path

    def write_json(self, name: str, payload: Any) -> Path:
        out_path = self.path(name)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return out_path
