import re

import numpy as np
import pytest

from dialdiff.metrics.frechet import FeatureSet, fid, frechet_distance
from dialdiff.utils.exceptions import MetricsException


def test_identical_gaussians_have_zero_distance() -> None:
    rng = np.random.default_rng(0)
    a = rng.normal(size=(5, 5))
    sigma = a @ a.T
    mu = rng.normal(size=5)
    assert frechet_distance(mu, sigma, mu, sigma) == pytest.approx(0.0, abs=1e-6)


def test_known_distance_between_isotropic_gaussians() -> None:
    # ||(3, 4)||^2 + tr(I) + tr(4I) - 2 tr(2I) = 25 + 2 + 8 - 8
    actual = frechet_distance(np.zeros(2), np.eye(2), np.array([3.0, 4.0]), 4.0 * np.eye(2))
    assert actual == pytest.approx(27.0)


def test_distance_is_symmetric_and_non_negative() -> None:
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    s1, s2 = a @ a.T, b @ b.T
    mu1, mu2 = rng.normal(size=3), rng.normal(size=3)
    forward = frechet_distance(mu1, s1, mu2, s2)
    assert forward >= 0.0
    assert forward == pytest.approx(frechet_distance(mu2, s2, mu1, s1), rel=1e-8)


def test_singular_covariances_are_supported() -> None:
    singular = np.diag([1.0, 0.0])
    assert frechet_distance(np.zeros(2), singular, np.zeros(2), singular) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize(
    "mu1, sigma1, mu2, sigma2, msg",
    [
        (np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2), np.eye(2), "sigma1 is not symmetric"),  # case 1
        (np.zeros(2), np.eye(2), np.zeros(2), np.full((2, 2), np.nan), "sigma2 contains NaN"),  # case 2
        (np.array([np.nan, 0.0]), np.eye(2), np.zeros(2), np.eye(2), "Mean vectors contain NaN"),  # case 3
        (np.zeros(3), np.eye(3), np.zeros(2), np.eye(2), "Dimension mismatch"),  # case 4
    ],
)
def test_invalid_inputs_raise(mu1, sigma1, mu2, sigma2, msg: str) -> None:
    with pytest.raises(MetricsException, match=re.escape(msg)):
        _ = frechet_distance(mu1, sigma1, mu2, sigma2)


def test_fid_of_identical_feature_sets_is_zero() -> None:
    features = np.random.default_rng(2).normal(size=(40, 4))
    assert fid(FeatureSet(features), FeatureSet(features.copy())) == pytest.approx(0.0, abs=1e-6)


def test_fid_grows_with_a_mean_shift() -> None:
    features = np.random.default_rng(3).normal(size=(50, 3))
    shifted = features + np.array([2.0, 0.0, 0.0])
    assert fid(FeatureSet(features), FeatureSet(shifted)) == pytest.approx(4.0, abs=1e-6)


def test_fid_of_independent_draws_recovers_the_mean_shift() -> None:
    n, shift = 10_000, np.ones(4)
    real = np.random.default_rng(4).normal(size=(n, 4))
    generated = np.random.default_rng(5).normal(size=(n, 4)) + shift
    assert fid(FeatureSet(real), FeatureSet(generated)) == pytest.approx(float(shift @ shift), abs=0.3)


@pytest.mark.parametrize(
    "features, msg",
    [
        (np.zeros((1, 3)), "at least 2 rows"),  # case 1
        (np.zeros(3), "must be a 2-d array"),  # case 2
        (np.array([[0.0, np.inf], [1.0, 2.0]]), "must be finite"),  # case 3
    ],
)
def test_invalid_feature_sets_raise(features: np.ndarray, msg: str) -> None:
    with pytest.raises(MetricsException, match=re.escape(msg)):
        _ = FeatureSet(features)


def test_fid_rejects_different_widths() -> None:
    with pytest.raises(MetricsException, match=re.escape("Feature widths differ: 2 vs 3")):
        _ = fid(FeatureSet(np.ones((2, 2)) * [[0.0], [1.0]]), FeatureSet(np.eye(3)))
