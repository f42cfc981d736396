from dialdiff.metrics.classifier import EvalClassifier, classify, extract_features, train_classifier
from dialdiff.metrics.frechet import FeatureSet, fid, frechet_distance
from dialdiff.metrics.inception_score import inception_score
from dialdiff.metrics.report import MetricReport, evaluate

__all__ = [
    "EvalClassifier",
    "FeatureSet",
    "MetricReport",
    "classify",
    "evaluate",
    "extract_features",
    "fid",
    "frechet_distance",
    "inception_score",
    "train_classifier",
]
