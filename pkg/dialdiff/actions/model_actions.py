import logging
from pathlib import Path

import torch

from dialdiff.actions.common_actions import (
    SAMPLES_DIRNAME,
    SHAPETALK_DATASET,
    Conditioning,
    generate_images,
    load_dialogs,
    load_splits,
    with_sample_refs,
)
from dialdiff.backbone.checkpoint import load_model_checkpoint
from dialdiff.config.app_settings import AppSettings
from dialdiff.data.dataset_io import write_image_set
from dialdiff.data.image_codec import decode_image, image_grid
from dialdiff.data.shapetalk import gen_shapetalk
from dialdiff.diffusion.schedule import schedule_from_config
from dialdiff.diffusion.trainer import TrainingData, TrainResult, train
from dialdiff.models.dialog_models import Dialog
from dialdiff.models.types import Split
from dialdiff.run_dir.run_directory import RunDirectory, RunManifest
from dialdiff.utils.constants import CASE_STUDY_FILENAME, VOCAB_FILENAME
from dialdiff.utils.exceptions import ImageCodecException
from dialdiff.utils.log_utils import CONSOLE, SPINNER

_LOGGER = logging.getLogger(__name__)


def train_action(settings: AppSettings, out_dir: Path, resume_from: Path | None = None) -> TrainResult:
    """
    Trains the joint noise predictor on the configured corpus. The manifest is written before anything else, so a
    run with `train.total_steps = 0` leaves a manifest-only run directory.
    """
    inputs = {"dataset": settings.data.dataset}
    if resume_from is not None:
        inputs["resume_from"] = str(resume_from)
    with RunDirectory(out_dir) as run_dir:
        run_dir.write_manifest(RunManifest.for_command("train", settings, settings.train.seed, inputs=inputs))
        if settings.train.total_steps == 0:
            CONSOLE.print("train.total_steps is 0: wrote the manifest only.")
            return TrainResult(final_checkpoint=None, step=0, ema_loss=None)
        with CONSOLE.status("Preparing training data ...", spinner=SPINNER):
            train_set = load_splits(settings.data)[Split.TRAIN]
            conditioning = Conditioning.build(settings, train_set.dialogs)
            data = TrainingData(images=train_set.images, texts=conditioning.embed(train_set.dialogs))
        conditioning.vocab.save(run_dir.path(VOCAB_FILENAME))
        _LOGGER.info(f"Training on {len(data)} pairs for {settings.train.total_steps} steps")
        with CONSOLE.status("Training ...", spinner=SPINNER) as status:

            def _on_step(step: int, loss: float) -> None:
                status.update(f"Training ... step {step}/{settings.train.total_steps} loss {loss:.4f}")

            result = train(
                settings,
                data,
                run_dir,
                resume_from=resume_from,
                header_extras=conditioning.header_extras(),
                on_step=_on_step,
            )
    CONSOLE.print(f"Training finished at step {result.step}; final checkpoint: {result.final_checkpoint}")
    return result


def _reference_images(dialogs_source: str, dialogs: list[Dialog], settings: AppSettings) -> list[torch.Tensor | None]:
    """Ground-truth images for the case-study sheet, where they can be found."""
    if dialogs_source == SHAPETALK_DATASET:
        return [s.image for s in gen_shapetalk(len(dialogs), settings.data.data_seed, Split.TEST)]
    source = Path(dialogs_source)
    root = source.parent if source.is_file() else source / Split.TEST.value
    references: list[torch.Tensor | None] = []
    for dialog in dialogs:
        try:
            references.append(decode_image(root / dialog.image_ref))
        except ImageCodecException:
            references.append(None)
    return references


def _case_study_rows(
    images: torch.Tensor, references: list[torch.Tensor | None], count: int
) -> list[list[torch.Tensor]]:
    rows = []
    for image, reference in zip(images[:count], references[:count], strict=True):
        rows.append([image] if reference is None else [reference, image])
    return rows


def sample_action(
    checkpoint: Path,
    dialogs_source: str,
    settings: AppSettings,
    out_dir: Path,
    grid: int = 0,
) -> Path:
    """
    Generates one image per dialog with the checkpoint's model and the sampler from `settings.sampling`. Images are
    keyed by sample id; the run directory's `samples/` is an image set `eval` reads directly. With `grid > 0`, the
    first `grid` dialogs also go into a case-study sheet (reference image beside the sample when one is on disk).

    The checkpoint must have been trained under the model, schedule and conditioning settings of `settings`; a
    mismatch raises `CheckpointException` before the run directory is created.
    """
    model, _, contents = load_model_checkpoint(checkpoint, expected=settings)
    seed = settings.sampling.seed
    with RunDirectory(out_dir) as run_dir:
        run_dir.write_manifest(
            RunManifest.for_command(
                "sample",
                settings,
                seed,
                inputs={"checkpoint": str(checkpoint), "dialogs": dialogs_source},
                outputs={"samples": SAMPLES_DIRNAME},
            )
        )
        conditioning = Conditioning.from_checkpoint_header(settings, contents.header)
        dialogs = load_dialogs(dialogs_source, settings.data)
        y_0 = conditioning.embed(dialogs)
        sched = schedule_from_config(settings.schedule)
        with CONSOLE.status(f"Sampling {len(dialogs)} images ...", spinner=SPINNER):
            images = generate_images(model, sched, y_0, settings, seed)
        samples_dir = run_dir.path(SAMPLES_DIRNAME)
        write_image_set(samples_dir, with_sample_refs(dialogs), list(images))
        if grid > 0:
            references = _reference_images(dialogs_source, dialogs[:grid], settings)
            image_grid(_case_study_rows(images, references, grid)).save(run_dir.path(CASE_STUDY_FILENAME))
    CONSOLE.print(f"Wrote {len(dialogs)} samples (seed {seed}) to {samples_dir}")
    return samples_dir
