import csv
import json
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field

from dialdiff.metrics.classifier import EvalClassifier, classify, extract_features
from dialdiff.metrics.frechet import FeatureSet, fid
from dialdiff.metrics.inception_score import inception_score
from dialdiff.models.scene import class_color
from dialdiff.utils.constants import FID_LABEL, IS_LABEL, UNTRAINED_BASELINE_LABEL

_LOGGER = logging.getLogger(__name__)

REPORT_CSV_COLUMNS = ("model", "variant", "fid", "is_mean", "is_std", "n_real", "n_gen")
ABLATION_CSV_COLUMNS = (
    "model",
    "variant",
    "fid",
    "is_mean",
    "is_std",
    "baseline",
    "baseline_fid",
    "baseline_is",
    "delta_fid",
    "delta_is",
    "color_acc",
)


class CategoryMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)
    fid: float = Field(ge=0.0)
    is_mean: float
    n_real: int
    n_gen: int


class MetricReport(BaseModel):
    """toy-FID / toy-IS of a generated image set against a real one, overall and per category."""

    model_config = ConfigDict(frozen=True)
    fid: float = Field(ge=0.0)
    is_mean: float
    is_std: float = Field(ge=0.0)
    real_is_mean: float
    real_is_std: float
    per_category: dict[str, CategoryMetrics] = Field(default_factory=dict)
    n_real: int
    n_gen: int
    extractor_checkpoint: str
    color_accuracy: float | None = None
    clamped_pixels: int = 0
    fid_label: str = FID_LABEL
    is_label: str = IS_LABEL


def color_decoding_accuracy(probs: np.ndarray, expected_colors: Sequence[str | None]) -> float | None:
    """Fraction of images whose predicted (shape, color) class carries the expected color; None without labels."""
    pairs = [(row, color) for row, color in zip(probs, expected_colors, strict=True) if color is not None]
    if not pairs:
        return None
    hits = sum(1 for row, color in pairs if class_color(int(np.argmax(row))).value == color)
    return hits / len(pairs)


def evaluate(
    real_images: torch.Tensor,
    real_categories: Sequence[str | None],
    gen_images: torch.Tensor,
    gen_categories: Sequence[str | None],
    classifier: EvalClassifier,
    splits: int = 10,
    extractor_checkpoint: str = "",
    gen_colors: Sequence[str | None] | None = None,
) -> MetricReport:
    """
    Overall and per-category toy-FID / toy-IS. Categories without at least two images on both sides are left out of
    the breakdown; IS splits shrink to the category size when needed.
    """
    real_features = extract_features(real_images, classifier)
    gen_features = extract_features(gen_images, classifier)
    real_probs = classify(real_images, classifier)
    gen_probs = classify(gen_images, classifier)
    is_mean, is_std = inception_score(gen_probs, splits=min(splits, gen_probs.shape[0]))
    real_is_mean, real_is_std = inception_score(real_probs, splits=min(splits, real_probs.shape[0]))

    per_category: dict[str, CategoryMetrics] = {}
    real_cats = np.asarray([c or "" for c in real_categories])
    gen_cats = np.asarray([c or "" for c in gen_categories])
    for category in sorted(set(real_cats.tolist()) & set(gen_cats.tolist()) - {""}):
        real_rows = real_features.features[real_cats == category]
        gen_rows = gen_features.features[gen_cats == category]
        if real_rows.shape[0] < 2 or gen_rows.shape[0] < 2:
            _LOGGER.warning(f"Skipping category {category!r}: fewer than 2 images on one side.")
            continue
        cat_probs = gen_probs[gen_cats == category]
        per_category[category] = CategoryMetrics(
            fid=fid(FeatureSet(real_rows), FeatureSet(gen_rows)),
            is_mean=inception_score(cat_probs, splits=min(splits, cat_probs.shape[0]))[0],
            n_real=int(real_rows.shape[0]),
            n_gen=int(gen_rows.shape[0]),
        )

    return MetricReport(
        fid=fid(real_features, gen_features),
        is_mean=is_mean,
        is_std=is_std,
        real_is_mean=real_is_mean,
        real_is_std=real_is_std,
        per_category=per_category,
        n_real=real_features.num_samples,
        n_gen=gen_features.num_samples,
        extractor_checkpoint=extractor_checkpoint,
        color_accuracy=color_decoding_accuracy(gen_probs, gen_colors) if gen_colors is not None else None,
        clamped_pixels=real_features.clamped_pixels + gen_features.clamped_pixels,
    )


def write_report_json(report: MetricReport, path: Path) -> Path:
    path.write_text(json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_report_csv(report: MetricReport, model_name: str, path: Path) -> Path:
    """One overall row (variant `all`) followed by one row per category (variant `category:<name>`)."""
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(REPORT_CSV_COLUMNS)
        writer.writerow([model_name, "all", report.fid, report.is_mean, report.is_std, report.n_real, report.n_gen])
        for category, metrics in report.per_category.items():
            writer.writerow(
                [model_name, f"category:{category}", metrics.fid, metrics.is_mean, "", metrics.n_real, metrics.n_gen]
            )
    return path


class AblationRow(BaseModel):
    model_config = ConfigDict(frozen=True)
    model: str
    variant: str
    trained: MetricReport
    baseline: MetricReport

    @property
    def delta_fid(self) -> float:
        return self.trained.fid - self.baseline.fid

    @property
    def delta_is(self) -> float:
        return self.trained.is_mean - self.baseline.is_mean

    def csv_row(self) -> list[object]:
        color_acc = self.trained.color_accuracy
        return [
            self.model,
            self.variant,
            self.trained.fid,
            self.trained.is_mean,
            self.trained.is_std,
            UNTRAINED_BASELINE_LABEL,
            self.baseline.fid,
            self.baseline.is_mean,
            self.delta_fid,
            self.delta_is,
            "" if color_acc is None else color_acc,
        ]


def write_ablation_csv(rows: Sequence[AblationRow], path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(ABLATION_CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())
    return path
