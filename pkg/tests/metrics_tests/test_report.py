import csv
from pathlib import Path

import numpy as np
import pytest

from dialdiff.data.shapetalk import sample_scene_images
from dialdiff.metrics.classifier import EvalClassifier
from dialdiff.metrics.report import (
    ABLATION_CSV_COLUMNS,
    REPORT_CSV_COLUMNS,
    AblationRow,
    CategoryMetrics,
    MetricReport,
    color_decoding_accuracy,
    evaluate,
    write_ablation_csv,
    write_report_csv,
    write_report_json,
)
from dialdiff.models.scene import NUM_SCENE_CLASSES, class_shape


def _report(fid: float, is_mean: float, color_accuracy: float | None = None) -> MetricReport:
    return MetricReport(
        fid=fid,
        is_mean=is_mean,
        is_std=0.1,
        real_is_mean=2.0,
        real_is_std=0.0,
        per_category={"circle": CategoryMetrics(fid=1.5, is_mean=1.2, n_real=4, n_gen=4)},
        n_real=12,
        n_gen=12,
        extractor_checkpoint="classifier.ddif",
        color_accuracy=color_accuracy,
    )


def test_evaluate_identical_sets() -> None:
    images, labels = sample_scene_images(24, seed=1)
    categories = [class_shape(int(i)).value for i in labels]
    report = evaluate(images, categories, images.clone(), categories, EvalClassifier(feature_dim=8), splits=2)
    assert report.fid < 1e-4
    assert report.is_mean == pytest.approx(report.real_is_mean)
    assert (report.n_real, report.n_gen) == (24, 24)
    assert report.fid_label == "toy-FID"
    assert report.is_label == "toy-IS"
    assert report.color_accuracy is None
    assert report.per_category
    for metrics in report.per_category.values():
        assert metrics.fid < 1e-4


def test_evaluate_skips_categories_without_labels() -> None:
    images, _ = sample_scene_images(6, seed=2)
    report = evaluate(images, [None] * 6, images, [None] * 6, EvalClassifier(feature_dim=8), splits=2)
    assert report.per_category == {}


def test_color_decoding_accuracy() -> None:
    probs = np.eye(NUM_SCENE_CLASSES)[[0, 1, 6]]
    # class 0 is a red circle, class 1 a green circle
    assert color_decoding_accuracy(probs, ["red", "red", None]) == pytest.approx(0.5)
    assert color_decoding_accuracy(probs, [None, None, None]) is None


def test_write_report_files(tmp_path: Path) -> None:
    report = _report(3.0, 2.5)
    write_report_json(report, tmp_path / "report.json")
    assert MetricReport.model_validate_json((tmp_path / "report.json").read_text()) == report

    write_report_csv(report, "dialdiff-hash", tmp_path / "report.csv")
    with (tmp_path / "report.csv").open(newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == REPORT_CSV_COLUMNS
    assert rows[1][:3] == ["dialdiff-hash", "all", "3.0"]
    assert rows[2][1] == "category:circle"
    assert len(rows) == 3


def test_ablation_rows_against_the_untrained_baseline(tmp_path: Path) -> None:
    row = AblationRow(model="dialdiff", variant="hash", trained=_report(3.0, 2.5, 0.75), baseline=_report(10.0, 1.5))
    assert row.delta_fid == pytest.approx(-7.0)
    assert row.delta_is == pytest.approx(1.0)
    write_ablation_csv([row, row.model_copy(update={"variant": "space"})], tmp_path / "ablation.csv")
    with (tmp_path / "ablation.csv").open(newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == list(ABLATION_CSV_COLUMNS)
    assert rows[0]["baseline"] == "untrained-baseline"
    assert float(rows[0]["delta_fid"]) == pytest.approx(-7.0)
    assert rows[0]["color_acc"] == "0.75"
    assert rows[1]["variant"] == "space"


def test_ablation_row_without_color_labels_leaves_the_cell_empty() -> None:
    row = AblationRow(model="m", variant="v", trained=_report(1.0, 1.0), baseline=_report(1.0, 1.0))
    assert row.csv_row()[-1] == ""
    assert row.delta_fid == 0.0
