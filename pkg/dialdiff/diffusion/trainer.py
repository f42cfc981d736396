"""
Training loop for the joint noise predictor. Every random draw of step k comes from streams derived from (seed, k)
and the data order of epoch e from (seed, e), so parameters, optimizer moments and the step counter are the only
state a resumed run needs to continue bit-for-bit.
"""

import csv
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import torch

from dialdiff.backbone.checkpoint import load_checkpoint, load_into_module, save_model_checkpoint
from dialdiff.backbone.network import JointNoisePredictor
from dialdiff.config.app_settings import AppSettings
from dialdiff.diffusion.objective import loss_joint
from dialdiff.diffusion.optimizer import AdamWState, adamw_step, lr_at
from dialdiff.diffusion.schedule import schedule_from_config
from dialdiff.run_dir.run_directory import RunDirectory
from dialdiff.utils.constants import CHECKPOINT_KIND_MODEL
from dialdiff.utils.exceptions import CheckpointException, TrainingException
from dialdiff.utils.seeding import derive_generator

_LOGGER = logging.getLogger(__name__)

METRICS_COLUMNS = ("step", "loss", "lr", "ema_loss")
_EPOCH_STREAM = 1
_STEP_STREAM = 2
# Settings a resumed run may change without altering the trajectory.
_RESUME_FREE_TRAIN_KEYS = frozenset(["total_steps", "checkpoint_every", "log_every"])


@dataclass(frozen=True)
class TrainingData:
    """Clean training pairs: images [N, H, W, C] in [-1, 1] and text embeddings y_0 [N, L, D]."""

    images: torch.Tensor
    texts: torch.Tensor

    def __post_init__(self) -> None:
        if self.images.shape[0] != self.texts.shape[0] or self.images.shape[0] < 1:
            raise ValueError(
                f"TrainingData needs matching non-empty batches. Got {self.images.shape[0]} images and "
                f"{self.texts.shape[0]} texts."
            )

    def __len__(self) -> int:
        return int(self.images.shape[0])


@dataclass
class TrainResult:
    final_checkpoint: Path | None
    step: int
    ema_loss: float | None
    ema_history: list[tuple[int, float]] = field(default_factory=list)


def batch_indices(num_samples: int, batch_size: int, seed: int, step: int) -> torch.Tensor:
    """
    Indices of the batch used at `step` (>= 1): consecutive slices of a per-epoch permutation, wrapping into the next
    epoch's permutation when an epoch runs out.
    """
    positions = torch.arange((step - 1) * batch_size, step * batch_size)
    epochs = positions // num_samples
    offsets = positions % num_samples
    out = torch.empty(batch_size, dtype=torch.long)
    for epoch in torch.unique(epochs).tolist():
        perm = torch.randperm(num_samples, generator=derive_generator(seed, _EPOCH_STREAM, epoch))
        mask = epochs == epoch
        out[mask] = perm[offsets[mask]]
    return out


def _resume_state(
    resume_from: Path, model: JointNoisePredictor, settings: AppSettings
) -> tuple[AdamWState, int, float | None]:
    contents = load_checkpoint(resume_from)
    load_into_module(contents, model, CHECKPOINT_KIND_MODEL)
    snapshot = contents.header.get("settings", {})
    for section in ("model", "schedule", "train"):
        current = getattr(settings, section).model_dump(mode="json")
        stored = dict(snapshot.get(section) or {})
        if section == "train":
            current = {k: v for k, v in current.items() if k not in _RESUME_FREE_TRAIN_KEYS}
            stored = {k: v for k, v in stored.items() if k not in _RESUME_FREE_TRAIN_KEYS}
        if stored != current:
            raise CheckpointException(f"Cannot resume from {resume_from}: its {section} settings differ")
    params = dict(model.named_parameters())
    state = AdamWState.from_tensors(contents.optim_tensors(), contents.step, params)
    ema = contents.header.get("ema_loss")
    _LOGGER.info(f"Resuming from {resume_from} at step {contents.step}")
    return state, contents.step, (float(ema) if ema is not None else None)


def train(
    settings: AppSettings,
    data: TrainingData,
    run_dir: RunDirectory,
    resume_from: Path | None = None,
    header_extras: dict[str, Any] | None = None,
    on_step: Callable[[int, float], None] | None = None,
) -> TrainResult:
    """
    Runs joint-noise training for `settings.train.total_steps` steps with AdamW and linear warmup. Writes the CSV
    metrics log, a checkpoint every `checkpoint_every` steps and `final.ddif`. A non-finite loss records
    `failure.json` naming the offending step, then re-raises.
    """
    train_config = settings.train
    if train_config.total_steps == 0:
        _LOGGER.info("total_steps is 0; nothing to train.")
        return TrainResult(final_checkpoint=None, step=0, ema_loss=None)
    sched = schedule_from_config(settings.schedule)
    model = JointNoisePredictor(settings.model, settings.schedule.num_timesteps, seed=train_config.seed)
    params = dict(model.named_parameters())
    state = AdamWState.zeros_like(params)
    start_step, ema = 0, None
    if resume_from is not None:
        state, start_step, ema = _resume_state(resume_from, model, settings)
    extras = dict(header_extras or {})

    def _checkpoint(path: Path, step: int) -> Path:
        return save_model_checkpoint(
            path, model, settings, step, extra_tensors=state.to_tensors(), extras={**extras, "ema_loss": ema}
        )

    history: list[tuple[int, float]] = []
    run_dir.checkpoints_dir.mkdir(parents=True, exist_ok=True)
    with run_dir.metrics_path.open("w", newline="", encoding="utf-8") as metrics_file:
        writer = csv.writer(metrics_file)
        writer.writerow(METRICS_COLUMNS)
        for step in range(start_step + 1, train_config.total_steps + 1):
            idx = batch_indices(len(data), train_config.batch_size, train_config.seed, step)
            try:
                loss, grads = loss_joint(
                    model,
                    sched,
                    data.images[idx],
                    data.texts[idx],
                    derive_generator(train_config.seed, _STEP_STREAM, step),
                    step=step,
                )
            except TrainingException as ex:
                run_dir.write_failure(ex, details={"step": ex.step, "diagnostics": ex.diagnostics})
                raise
            adamw_step(params, grads, state, train_config, step)
            ema = loss if ema is None else train_config.ema_decay * ema + (1.0 - train_config.ema_decay) * loss
            if step % train_config.log_every == 0 or step == train_config.total_steps:
                writer.writerow([step, repr(loss), repr(lr_at(train_config, step)), repr(ema)])
                history.append((step, ema))
                _LOGGER.debug(f"step {step}: loss={loss:.4f} ema={ema:.4f}")
            if step % train_config.checkpoint_every == 0:
                _checkpoint(run_dir.checkpoint_path(step), step)
            if on_step is not None:
                on_step(step, loss)
    final_step = max(start_step, train_config.total_steps)
    final_path = _checkpoint(run_dir.final_checkpoint_path, final_step)
    _LOGGER.info(f"Training finished at step {final_step} (ema loss {ema}); final checkpoint {final_path}")
    return TrainResult(final_checkpoint=final_path, step=final_step, ema_loss=ema, ema_history=history)
