import logging

import numpy as np
from numpy.typing import NDArray
from scipy.special import rel_entr

from dialdiff.utils.exceptions import MetricsException

_LOGGER = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-6


def inception_score(probs: NDArray[np.float64], splits: int = 10) -> tuple[float, float]:
    """
    Splits the N rows into `splits` consecutive chunks of N // splits rows (remainder dropped); per chunk the score is
    exp(mean_x KL(p(y|x) || p_bar(y))) with p_bar the chunk's mean row. Returns the mean and population std of the
    chunk scores.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise MetricsException(f"probs must be a non-empty [N, C] array. Got shape {probs.shape}")
    if not np.isfinite(probs).all() or (probs < 0.0).any():
        raise MetricsException("probs rows must be finite and non-negative.")
    row_sums = probs.sum(axis=1)
    worst = float(np.max(np.abs(row_sums - 1.0)))
    if worst > ROW_SUM_TOLERANCE:
        raise MetricsException(f"probs rows must sum to 1 within {ROW_SUM_TOLERANCE} (worst deviation {worst:.3e}).")
    if splits < 1:
        raise MetricsException(f"splits must be >= 1. Got {splits}")
    split_size = probs.shape[0] // splits
    if split_size == 0:
        raise MetricsException(f"Cannot split {probs.shape[0]} rows into {splits} non-empty splits.")
    if split_size * splits != probs.shape[0]:
        _LOGGER.debug(f"Dropping {probs.shape[0] - split_size * splits} rows that do not fill a split.")
    scores = []
    for k in range(splits):
        part = probs[k * split_size : (k + 1) * split_size]
        p_bar = part.mean(axis=0, keepdims=True)
        kl = rel_entr(part, p_bar).sum(axis=1)
        scores.append(float(np.exp(kl.mean())))
    return float(np.mean(scores)), float(np.std(scores))
