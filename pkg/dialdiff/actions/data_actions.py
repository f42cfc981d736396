import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import torch
from rich.table import Table

from dialdiff.actions.common_actions import Conditioning, load_splits
from dialdiff.config.app_settings import AppSettings
from dialdiff.data.dataset_io import write_dataset
from dialdiff.data.shapetalk import gen_shapetalk, sample_scene_images
from dialdiff.dialog_prep.concat import concat_dialog
from dialdiff.metrics.classifier import save_classifier, train_classifier
from dialdiff.models.dialog_models import Dialog
from dialdiff.models.types import Split
from dialdiff.run_dir.run_directory import RunDirectory, RunManifest
from dialdiff.utils.constants import (
    CLASSIFIER_CHECKPOINT_FILENAME,
    MAX_TOKENS,
    PREP_STATS_FILENAME,
    TOKENS_FILENAME,
    VOCAB_FILENAME,
)
from dialdiff.utils.log_utils import CONSOLE, SPINNER

_LOGGER = logging.getLogger(__name__)

# Token-length histogram edges; the last bin collects texts at or over the budget.
_LENGTH_BIN_EDGES = (0, 10, 20, 30, 40, 50, 60, 70, MAX_TOKENS)


def _length_histogram(lengths: list[int]) -> dict[str, int]:
    edges = np.asarray(_LENGTH_BIN_EDGES + (np.inf,), dtype=np.float64)
    counts, _ = np.histogram(np.asarray(lengths, dtype=np.float64), bins=edges)
    labels = [f"{lo}-{hi - 1}" for lo, hi in zip(_LENGTH_BIN_EDGES[:-1], _LENGTH_BIN_EDGES[1:], strict=True)]
    labels.append(f">={MAX_TOKENS}")
    return {label: int(count) for label, count in zip(labels, counts, strict=True)}


def prep_action(settings: AppSettings, out_dir: Path) -> dict[str, Any]:
    """
    Tokenizes the configured corpus with the configured strategy and keep mode. Writes the vocabulary (built on the
    train split), one token row per dialog and the stats JSON; prints truncation rate, OOV rate and the histogram.
    """
    with RunDirectory(out_dir) as run_dir:
        run_dir.write_manifest(
            RunManifest.for_command(
                "prep",
                settings,
                settings.data.data_seed,
                inputs={"dataset": settings.data.dataset},
                outputs={"vocab": VOCAB_FILENAME, "tokens": TOKENS_FILENAME, "stats": PREP_STATS_FILENAME},
            )
        )
        with CONSOLE.status("Loading corpus ...", spinner=SPINNER):
            splits = load_splits(settings.data)
        conditioning = Conditioning.build(settings, splits[Split.TRAIN].dialogs)
        conditioning.vocab.save(run_dir.path(VOCAB_FILENAME))

        stats: dict[str, Any] = {"strategy": settings.data.strategy.value, "keep": settings.data.keep.value}
        stats["vocab_size"] = conditioning.vocab.size
        with run_dir.path(TOKENS_FILENAME).open("w", encoding="utf-8") as f:
            for split, image_set in splits.items():
                seqs = conditioning.tokenize(image_set.dialogs)
                for dialog, seq in zip(image_set.dialogs, seqs, strict=True):
                    row = {"id": dialog.sample_id, "split": split.value, "ids": list(seq.ids)}
                    f.write(json.dumps({**row, "source_length": seq.source_length}) + "\n")
                texts = [concat_dialog(d, settings.data.strategy) for d in image_set.dialogs]
                stats[split.value] = {
                    "num_dialogs": len(seqs),
                    "truncation_rate": sum(s.truncated for s in seqs) / len(seqs),
                    "oov_rate": conditioning.vocab.coverage(texts),
                    "mean_turns": float(np.mean([d.num_turns for d in image_set.dialogs])),
                    "length_histogram": _length_histogram([s.source_length for s in seqs]),
                }
        run_dir.write_json(PREP_STATS_FILENAME, stats)
    CONSOLE.print(_prep_table(stats))
    return stats


def _prep_table(stats: dict[str, Any]) -> Table:
    table = Table(title=f"prep: strategy={stats['strategy']} keep={stats['keep']} vocab={stats['vocab_size']}")
    table.add_column("split")
    table.add_column("dialogs", justify="right")
    table.add_column("truncated", justify="right")
    table.add_column("OOV", justify="right")
    table.add_column("length histogram")
    for split in Split:
        if split.value not in stats:
            continue
        row = stats[split.value]
        histogram = " ".join(f"{k}:{v}" for k, v in row["length_histogram"].items())
        table.add_row(
            split.value, str(row["num_dialogs"]), f"{row['truncation_rate']:.2%}", f"{row['oov_rate']:.2%}", histogram
        )
    return table


def gen_data_action(settings: AppSettings, out_dir: Path) -> Path:
    """Writes the ShapeTalk-lite train and test splits with `data.n_train` / `data.n_test` samples."""
    seed = settings.data.data_seed
    with RunDirectory(out_dir) as run_dir:
        run_dir.write_manifest(RunManifest.for_command("gen-data", settings, seed, outputs={"dataset": "."}))
        with CONSOLE.status("Generating ShapeTalk-lite ...", spinner=SPINNER):
            splits: dict[Split, tuple[list[Dialog], list[torch.Tensor]]] = {}
            for split, n in ((Split.TRAIN, settings.data.n_train), (Split.TEST, settings.data.n_test)):
                samples = gen_shapetalk(n, seed, split)
                splits[split] = ([s.dialog for s in samples], [s.image for s in samples])
            write_dataset(run_dir.root, splits, seed)
    CONSOLE.print(f"Wrote {settings.data.n_train} train and {settings.data.n_test} test samples to {out_dir}")
    return out_dir


def train_classifier_action(settings: AppSettings, out_dir: Path) -> Path:
    """Fits the evaluation classifier on rendered scenes and writes it; rejected fits raise and write nothing."""
    eval_config = settings.eval
    with RunDirectory(out_dir) as run_dir:
        run_dir.write_manifest(
            RunManifest.for_command(
                "train-classifier",
                settings,
                eval_config.classifier_seed,
                outputs={"classifier": CLASSIFIER_CHECKPOINT_FILENAME},
            )
        )
        with CONSOLE.status("Training evaluation classifier ...", spinner=SPINNER):
            path = fit_and_save_classifier(settings, run_dir.path(CLASSIFIER_CHECKPOINT_FILENAME))
    CONSOLE.print(f"Evaluation classifier written to {path}")
    return path


def fit_and_save_classifier(settings: AppSettings, path: Path) -> Path:
    eval_config = settings.eval
    train_images, train_labels = sample_scene_images(eval_config.classifier_train_samples, eval_config.classifier_seed)
    holdout_images, holdout_labels = sample_scene_images(
        eval_config.classifier_holdout_samples,
        eval_config.classifier_seed,
        start=eval_config.classifier_train_samples,
    )
    fit = train_classifier(train_images, train_labels, holdout_images, holdout_labels, eval_config)
    return save_classifier(path, fit, eval_config)
