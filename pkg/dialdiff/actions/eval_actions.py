import logging
from pathlib import Path

import torch
from rich.table import Table

from dialdiff.actions.common_actions import (
    SAMPLES_DIRNAME,
    Conditioning,
    generate_images,
    load_splits,
    with_sample_refs,
)
from dialdiff.actions.data_actions import fit_and_save_classifier
from dialdiff.backbone.checkpoint import load_model_checkpoint
from dialdiff.backbone.network import JointNoisePredictor
from dialdiff.config.app_settings import AppSettings
from dialdiff.data.dataset_io import ImageSet, read_image_set, write_image_set
from dialdiff.data.image_codec import image_grid
from dialdiff.diffusion.schedule import schedule_from_config
from dialdiff.diffusion.trainer import TrainingData, train
from dialdiff.metrics.classifier import EvalClassifier, load_classifier
from dialdiff.metrics.report import (
    AblationRow,
    MetricReport,
    evaluate,
    write_ablation_csv,
    write_report_csv,
    write_report_json,
)
from dialdiff.models.types import ConcatStrategy, Split
from dialdiff.run_dir.run_directory import RunDirectory, RunManifest
from dialdiff.utils.constants import (
    ABLATION_CSV_FILENAME,
    CASE_STUDY_FILENAME,
    CLASSIFIER_CHECKPOINT_FILENAME,
    REPORT_CSV_FILENAME,
    REPORT_JSON_FILENAME,
)
from dialdiff.utils.log_utils import CONSOLE, SPINNER

_LOGGER = logging.getLogger(__name__)


def _evaluate_sets(
    real: ImageSet, generated: ImageSet, classifier: EvalClassifier, settings: AppSettings, extractor: Path
) -> MetricReport:
    return evaluate(
        real.images,
        real.categories,
        generated.images,
        generated.categories,
        classifier,
        splits=settings.eval.is_splits,
        extractor_checkpoint=str(extractor),
        gen_colors=generated.colors,
    )


def eval_action(
    real_dir: Path,
    gen_dir: Path,
    classifier_ckpt: Path,
    settings: AppSettings,
    out_dir: Path,
    model_name: str = "model",
) -> MetricReport:
    """toy-FID / toy-IS of the image set in `gen_dir` against the one in `real_dir`, overall and per category."""
    with RunDirectory(out_dir) as run_dir:
        run_dir.write_manifest(
            RunManifest.for_command(
                "eval",
                settings,
                settings.eval.classifier_seed,
                inputs={"real": str(real_dir), "generated": str(gen_dir), "classifier": str(classifier_ckpt)},
                outputs={"report_json": REPORT_JSON_FILENAME, "report_csv": REPORT_CSV_FILENAME},
            )
        )
        classifier = load_classifier(classifier_ckpt)
        with CONSOLE.status("Extracting features ...", spinner=SPINNER):
            real, generated = read_image_set(real_dir), read_image_set(gen_dir)
            report = _evaluate_sets(real, generated, classifier, settings, classifier_ckpt)
        write_report_json(report, run_dir.path(REPORT_JSON_FILENAME))
        write_report_csv(report, model_name, run_dir.path(REPORT_CSV_FILENAME))
    CONSOLE.print(_report_table(report))
    return report


def _report_table(report: MetricReport) -> Table:
    table = Table(title=f"{report.fid_label} / {report.is_label} ({report.n_gen} generated vs {report.n_real} real)")
    table.add_column("variant")
    table.add_column(report.fid_label, justify="right")
    table.add_column(report.is_label, justify="right")
    table.add_row("all", f"{report.fid:.3f}", f"{report.is_mean:.3f} +- {report.is_std:.3f}")
    for category, metrics in report.per_category.items():
        table.add_row(category, f"{metrics.fid:.3f}", f"{metrics.is_mean:.3f}")
    if report.color_accuracy is not None:
        table.caption = f"color decoding accuracy: {report.color_accuracy:.2%}"
    return table


def _ablation_table(rows: list[AblationRow]) -> Table:
    table = Table(title="Concatenation strategy ablation")
    for column in ("variant", "toy-FID", "toy-IS", "delta FID", "delta IS", "color acc"):
        table.add_column(column, justify="left" if column == "variant" else "right")
    for row in rows:
        color_acc = row.trained.color_accuracy
        table.add_row(
            row.variant,
            f"{row.trained.fid:.3f}",
            f"{row.trained.is_mean:.3f}",
            f"{row.delta_fid:+.3f}",
            f"{row.delta_is:+.3f}",
            "-" if color_acc is None else f"{color_acc:.2%}",
        )
    return table


def ablate_action(
    settings: AppSettings, out_dir: Path, classifier_ckpt: Path | None = None, grid: int = 4
) -> list[AblationRow]:
    """
    Trains one model per concatenation strategy under identical seeds, samples the test dialogs with each and with
    the untrained model of the same seed, and scores everything with one shared classifier. Writes one row per
    strategy with the untrained baseline and the deltas against it.
    """
    model_name = f"dialdiff-{settings.model.preset.value}"
    with RunDirectory(out_dir) as run_dir:
        run_dir.write_manifest(
            RunManifest.for_command(
                "ablate",
                settings,
                settings.train.seed,
                inputs={"dataset": settings.data.dataset, "classifier": str(classifier_ckpt or "")},
                outputs={"ablation": ABLATION_CSV_FILENAME},
            )
        )
        if classifier_ckpt is None:
            with CONSOLE.status("Training evaluation classifier ...", spinner=SPINNER):
                classifier_ckpt = fit_and_save_classifier(settings, run_dir.path(CLASSIFIER_CHECKPOINT_FILENAME))
        classifier = load_classifier(classifier_ckpt)
        with CONSOLE.status("Loading corpus ...", spinner=SPINNER):
            splits = load_splits(settings.data)
        train_set, test_set = splits[Split.TRAIN], splits[Split.TEST]
        sched = schedule_from_config(settings.schedule)

        rows: list[AblationRow] = []
        case_study: list[list[torch.Tensor]] = [[image] for image in test_set.images[:grid]]
        for strategy in ConcatStrategy:
            variant_settings = settings.with_overrides(strategy=strategy)
            conditioning = Conditioning.build(variant_settings, train_set.dialogs)
            data = TrainingData(images=train_set.images, texts=conditioning.embed(train_set.dialogs))
            with RunDirectory(run_dir.path(strategy.value)) as variant_dir:
                variant_dir.write_manifest(
                    RunManifest.for_command("ablate:train", variant_settings, variant_settings.train.seed)
                )
                with CONSOLE.status(f"Training with strategy {strategy.value} ...", spinner=SPINNER):
                    result = train(variant_settings, data, variant_dir, header_extras=conditioning.header_extras())
                untrained = JointNoisePredictor(
                    variant_settings.model, variant_settings.schedule.num_timesteps, seed=variant_settings.train.seed
                )
                trained = untrained
                if result.final_checkpoint is not None:
                    trained = load_model_checkpoint(result.final_checkpoint, expected=variant_settings)[0]
                y_test = conditioning.embed(test_set.dialogs)
                reports: dict[str, MetricReport] = {}
                with CONSOLE.status(f"Sampling and scoring strategy {strategy.value} ...", spinner=SPINNER):
                    for label, model in (("trained", trained), ("baseline", untrained)):
                        images = generate_images(model, sched, y_test, variant_settings, variant_settings.sampling.seed)
                        generated = ImageSet(dialogs=test_set.dialogs, images=images)
                        if label == "trained":
                            samples_dir = variant_dir.path(SAMPLES_DIRNAME)
                            write_image_set(samples_dir, with_sample_refs(test_set.dialogs), list(images))
                            for row, image in zip(case_study, images[:grid], strict=False):
                                row.append(image)
                        reports[label] = _evaluate_sets(test_set, generated, classifier, settings, classifier_ckpt)
                        write_report_json(reports[label], variant_dir.path(f"{label}_{REPORT_JSON_FILENAME}"))
            rows.append(
                AblationRow(
                    model=model_name, variant=strategy.value, trained=reports["trained"], baseline=reports["baseline"]
                )
            )
            trained_fid, baseline_fid = reports["trained"].fid, reports["baseline"].fid
            _LOGGER.info(f"{strategy.value}: toy-FID {trained_fid:.3f} (untrained baseline {baseline_fid:.3f})")
        write_ablation_csv(rows, run_dir.path(ABLATION_CSV_FILENAME))
        if grid > 0:
            image_grid(case_study).save(run_dir.path(CASE_STUDY_FILENAME))
    CONSOLE.print(_ablation_table(rows))
    return rows
