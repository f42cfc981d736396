import math
import re

import numpy as np
import pytest

from dialdiff.metrics.inception_score import inception_score
from dialdiff.utils.exceptions import MetricsException


def test_uniform_predictions_score_one() -> None:
    mean, std = inception_score(np.full((20, 5), 0.2), splits=4)
    assert mean == pytest.approx(1.0)
    assert std == pytest.approx(0.0, abs=1e-12)


def test_confident_and_diverse_predictions_score_the_class_count() -> None:
    probs = np.tile(np.eye(4), (5, 1))
    mean, std = inception_score(probs, splits=5)
    assert mean == pytest.approx(4.0)
    assert std == pytest.approx(0.0, abs=1e-12)


def test_confident_single_class_scores_one() -> None:
    probs = np.zeros((6, 3))
    probs[:, 1] = 1.0
    assert inception_score(probs, splits=2)[0] == pytest.approx(1.0)


def test_mixed_confidence_two_class_score() -> None:
    # p_bar = (0.7, 0.3)
    kl_confident = 0.9 * math.log(0.9 / 0.7) + 0.1 * math.log(0.1 / 0.3)
    kl_unsure = 0.5 * math.log(0.5 / 0.7) + 0.5 * math.log(0.5 / 0.3)
    mean, std = inception_score(np.array([[0.9, 0.1], [0.5, 0.5]]), splits=1)
    assert mean == pytest.approx(math.exp((kl_confident + kl_unsure) / 2.0), rel=1e-12)
    assert std == 0.0


def test_split_scores_are_averaged() -> None:
    # first split: p_bar = (0.5, 0.5); second split: identical rows score 1
    first = math.exp(0.9 * math.log(1.8) + 0.1 * math.log(0.2))
    probs = np.array([[0.9, 0.1], [0.1, 0.9], [0.3, 0.7], [0.3, 0.7]])
    mean, std = inception_score(probs, splits=2)
    assert mean == pytest.approx((first + 1.0) / 2.0, rel=1e-12)
    assert std == pytest.approx(abs(first - 1.0) / 2.0, rel=1e-12)


def test_remainder_rows_are_dropped() -> None:
    # the trailing row would change the second split's marginal if it were kept
    probs = np.vstack([np.tile(np.eye(2), (2, 1)), [[1.0, 0.0]]])
    mean, _ = inception_score(probs, splits=2)
    assert mean == pytest.approx(2.0)


@pytest.mark.parametrize(
    "probs, splits, msg",
    [
        (np.full((4, 2), 0.6), 2, "rows must sum to 1"),  # case 1
        (np.array([[1.5, -0.5], [0.5, 0.5]]), 1, "finite and non-negative"),  # case 2
        (np.full((3, 2), 0.5), 4, "Cannot split 3 rows into 4"),  # case 3
        (np.full((3, 2), 0.5), 0, "splits must be >= 1"),  # case 4
        (np.zeros((0, 2)), 1, "non-empty [N, C]"),  # case 5
    ],
)
def test_invalid_inputs_raise(probs: np.ndarray, splits: int, msg: str) -> None:
    with pytest.raises(MetricsException, match=re.escape(msg)):
        _ = inception_score(probs, splits=splits)
