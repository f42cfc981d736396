"""
Binary checkpoint format shared by the noise predictor, its optimizer moments and the evaluation classifier.

    magic `DDIF` | uint32 format version | uint32 header length | UTF-8 JSON header | uint32 tensor count
    per tensor: uint32 name length | UTF-8 name | uint32 ndim | uint64 dims... | little-endian float64 payload

All integers are little-endian. The JSON header echoes the config the tensors were produced under.
"""

import json
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Final

import numpy as np
import torch
from torch import nn

from dialdiff.backbone.network import JointNoisePredictor
from dialdiff.config.app_settings import AppSettings, settings_from_snapshot
from dialdiff.utils.constants import (
    CHECKPOINT_KIND_MODEL,
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    OPTIM_TENSOR_PREFIX,
)
from dialdiff.utils.exceptions import AppConfigException, CheckpointException

_LOGGER = logging.getLogger(__name__)

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_FLOAT64_LE = np.dtype("<f8")


@dataclass(frozen=True)
class CheckpointContents:
    header: dict[str, Any]
    tensors: dict[str, torch.Tensor]

    @property
    def kind(self) -> str:
        return str(self.header.get("kind", ""))

    @property
    def step(self) -> int:
        return int(self.header.get("step", 0))

    def module_tensors(self) -> dict[str, torch.Tensor]:
        return {k: v for k, v in self.tensors.items() if not k.startswith(OPTIM_TENSOR_PREFIX)}

    def optim_tensors(self) -> dict[str, torch.Tensor]:
        """Optimizer tensors with the `optim.` prefix stripped."""
        prefix_len = len(OPTIM_TENSOR_PREFIX)
        return {k[prefix_len:]: v for k, v in self.tensors.items() if k.startswith(OPTIM_TENSOR_PREFIX)}


def save_checkpoint(path: Path, header: dict[str, Any], tensors: dict[str, torch.Tensor]) -> Path:
    """Writes the checkpoint atomically (temp file + rename) and returns its path."""
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks: list[bytes] = [CHECKPOINT_MAGIC, _U32.pack(CHECKPOINT_VERSION), _U32.pack(len(header_bytes)), header_bytes]
    chunks.append(_U32.pack(len(tensors)))
    for name in sorted(tensors):
        array = tensors[name].detach().cpu().to(torch.float64).contiguous().numpy()
        name_bytes = name.encode("utf-8")
        chunks.append(_U32.pack(len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U64.pack(dim) for dim in array.shape)
        chunks.append(array.astype(_FLOAT64_LE, copy=False).tobytes(order="C"))
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(f"{path.name}.tmp")
    tmp_path.write_bytes(b"".join(chunks))
    os.replace(tmp_path, path)
    _LOGGER.debug(f"Wrote checkpoint {path} ({len(tensors)} tensors, kind={header.get('kind')})")
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self._data = data
        self._path = path
        self._offset = 0

    def take(self, n: int) -> bytes:
        if self._offset + n > len(self._data):
            raise CheckpointException(f"Truncated checkpoint: {self._path}")
        chunk = self._data[self._offset : self._offset + n]
        self._offset += n
        return chunk

    def u32(self) -> int:
        return int(_U32.unpack(self.take(_U32.size))[0])

    def u64(self) -> int:
        return int(_U64.unpack(self.take(_U64.size))[0])

    @property
    def exhausted(self) -> bool:
        return self._offset == len(self._data)


def load_checkpoint(path: Path) -> CheckpointContents:
    if not path.is_file():
        raise CheckpointException(f"Checkpoint not found: {path}")
    reader = _Reader(path.read_bytes(), path)
    if reader.take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointException(f"Not a dialdiff checkpoint (bad magic bytes): {path}")
    version = reader.u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointException(f"Unsupported checkpoint format version {version} in {path}")
    try:
        header = json.loads(reader.take(reader.u32()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as ex:
        raise CheckpointException(f"Corrupt checkpoint header in {path}") from ex
    tensors: dict[str, torch.Tensor] = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8")
        shape = tuple(reader.u64() for _ in range(reader.u32()))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        payload = np.frombuffer(reader.take(count * _FLOAT64_LE.itemsize), dtype=_FLOAT64_LE)
        tensors[name] = torch.from_numpy(payload.astype(np.float64).reshape(shape))
    if not reader.exhausted:
        raise CheckpointException(f"Trailing bytes after the last tensor in {path}")
    return CheckpointContents(header=header, tensors=tensors)


def validate_against_module(contents: CheckpointContents, module: nn.Module, expected_kind: str) -> None:
    """Raises `CheckpointException` unless the checkpoint's kind, tensor names and shapes match `module`."""
    if contents.kind != expected_kind:
        raise CheckpointException(f"Expected a checkpoint of kind {expected_kind!r}, got {contents.kind!r}.")
    expected = {name: tuple(p.shape) for name, p in module.named_parameters()}
    actual = {name: tuple(t.shape) for name, t in contents.module_tensors().items()}
    if set(expected) != set(actual):
        missing = sorted(set(expected) - set(actual))
        unexpected = sorted(set(actual) - set(expected))
        raise CheckpointException(f"Checkpoint tensor names mismatch. Missing: {missing}. Unexpected: {unexpected}.")
    mismatched = {name: (actual[name], shape) for name, shape in expected.items() if actual[name] != shape}
    if mismatched:
        raise CheckpointException(f"Checkpoint tensor shapes mismatch (checkpoint, expected): {mismatched}")


def load_into_module(contents: CheckpointContents, module: nn.Module, expected_kind: str) -> None:
    validate_against_module(contents, module, expected_kind)
    params = dict(module.named_parameters())
    with torch.no_grad():
        for name, tensor in contents.module_tensors().items():
            params[name].copy_(tensor)


def model_checkpoint_header(settings: AppSettings, step: int, extras: dict[str, Any] | None = None) -> dict[str, Any]:
    """Config echo of a noise-predictor checkpoint: model dims, depth, T, step and the full settings snapshot."""
    model_config = settings.model
    header: dict[str, Any] = {
        "kind": CHECKPOINT_KIND_MODEL,
        "dim": model_config.dim,
        "depth": model_config.depth,
        "heads": model_config.heads,
        "mlp_dim": model_config.mlp_dim,
        "image_shape": list(model_config.image_shape),
        "text_shape": list(model_config.text_shape),
        "num_timesteps": settings.schedule.num_timesteps,
        "step": step,
        "settings": settings.snapshot(),
    }
    header.update(extras or {})
    return header


def save_model_checkpoint(
    path: Path,
    model: JointNoisePredictor,
    settings: AppSettings,
    step: int,
    extra_tensors: dict[str, torch.Tensor] | None = None,
    extras: dict[str, Any] | None = None,
) -> Path:
    tensors = {name: p.detach() for name, p in model.named_parameters()}
    tensors.update(extra_tensors or {})
    return save_checkpoint(path, model_checkpoint_header(settings, step, extras), tensors)


def load_model_checkpoint(
    path: Path, expected: AppSettings | None = None
) -> tuple[JointNoisePredictor, AppSettings, CheckpointContents]:
    """
    Rebuilds the noise predictor stored at `path`. With `expected` settings, the checkpoint's model and schedule
    sections and the conditioning fields of its data section (strategy, keep, max_tokens) must match them; any
    difference raises `CheckpointException`.
    """
    contents = load_checkpoint(path)
    if contents.kind != CHECKPOINT_KIND_MODEL:
        raise CheckpointException(f"Expected a checkpoint of kind {CHECKPOINT_KIND_MODEL!r}, got {contents.kind!r}.")
    snapshot = contents.header.get("settings")
    if not isinstance(snapshot, dict):
        raise CheckpointException(f"Checkpoint {path} carries no settings snapshot.")
    try:
        settings = settings_from_snapshot(snapshot)
    except AppConfigException as ex:
        raise CheckpointException(f"Checkpoint {path} carries an invalid settings snapshot.") from ex
    if expected is not None:
        _check_config_match(settings, expected, path)
    model = JointNoisePredictor(settings.model, settings.schedule.num_timesteps)
    load_into_module(contents, model, CHECKPOINT_KIND_MODEL)
    _LOGGER.info(f"Loaded noise predictor from {path} (step {contents.step}).")
    return model, settings, contents


# Data settings that shape the conditioning text; a model trained under one cannot be sampled under another.
_CONDITIONING_FIELDS: Final[tuple[str, ...]] = ("strategy", "keep", "max_tokens")


def _section_diffs(actual: dict[str, Any], expected: dict[str, Any]) -> dict[str, tuple[Any, Any]]:
    return {
        key: (actual.get(key), expected.get(key))
        for key in sorted(set(actual) | set(expected))
        if actual.get(key) != expected.get(key)
    }


def _check_config_match(actual: AppSettings, expected: AppSettings, path: Path) -> None:
    for section in ("model", "schedule"):
        diffs = _section_diffs(
            getattr(actual, section).model_dump(mode="json"), getattr(expected, section).model_dump(mode="json")
        )
        if diffs:
            raise CheckpointException(
                f"Checkpoint {path} does not match the configured {section} section (checkpoint, config): {diffs}"
            )
    diffs = _section_diffs(
        actual.data.model_dump(mode="json", include=set(_CONDITIONING_FIELDS)),
        expected.data.model_dump(mode="json", include=set(_CONDITIONING_FIELDS)),
    )
    if diffs:
        raise CheckpointException(
            f"Checkpoint {path} was trained with different conditioning settings (checkpoint, config): {diffs}"
        )
