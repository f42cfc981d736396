import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from dialdiff.utils.exceptions import MetricsException

_LOGGER = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-6

type FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class FeatureSet:
    """Extracted features [N, d] (N >= 2, finite) plus the number of input pixels clamped into [-1, 1]."""

    features: FloatArray
    clamped_pixels: int = 0

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise MetricsException(f"Features must be a 2-d array. Got shape {self.features.shape}")
        if self.features.shape[0] < 2:
            raise MetricsException(f"A feature set needs at least 2 rows. Got {self.features.shape[0]}")
        if not np.isfinite(self.features).all():
            raise MetricsException("Feature rows must be finite.")

    @property
    def num_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def gaussian(self) -> tuple[FloatArray, FloatArray]:
        """Mean and unbiased (N - 1) covariance."""
        return self.features.mean(axis=0), np.atleast_2d(np.cov(self.features, rowvar=False, ddof=1))


def _symmetrized(sigma: FloatArray, name: str) -> FloatArray:
    sigma = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    if np.isnan(sigma).any():
        raise MetricsException(f"{name} contains NaN.")
    if sigma.shape[0] != sigma.shape[1]:
        raise MetricsException(f"{name} must be square. Got {sigma.shape}")
    asymmetry = float(np.max(np.abs(sigma - sigma.T))) if sigma.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE:
        raise MetricsException(f"{name} is not symmetric (max asymmetry {asymmetry:.3e}).")
    return 0.5 * (sigma + sigma.T)


def _psd_sqrt(sigma: FloatArray) -> FloatArray:
    eigvals, eigvecs = linalg.eigh(sigma)
    return (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T


def frechet_distance(mu1: FloatArray, sigma1: FloatArray, mu2: FloatArray, sigma2: FloatArray) -> float:
    """
    ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)), with Tr((S1 S2)^(1/2)) taken as the sum of square roots of the
    eigenvalues of the symmetric S1^(1/2) S2 S1^(1/2), eigenvalues clamped at 0. The result is clamped at 0.
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=np.float64))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=np.float64))
    if np.isnan(mu1).any() or np.isnan(mu2).any():
        raise MetricsException("Mean vectors contain NaN.")
    sigma1 = _symmetrized(sigma1, "sigma1")
    sigma2 = _symmetrized(sigma2, "sigma2")
    if not (mu1.shape[0] == mu2.shape[0] == sigma1.shape[0] == sigma2.shape[0]):
        raise MetricsException(
            f"Dimension mismatch: mu1 {mu1.shape}, mu2 {mu2.shape}, sigma1 {sigma1.shape}, sigma2 {sigma2.shape}"
        )
    sqrt_sigma1 = _psd_sqrt(sigma1)
    middle = sqrt_sigma1 @ sigma2 @ sqrt_sigma1
    eigvals = linalg.eigvalsh(0.5 * (middle + middle.T))
    tr_covmean = float(np.sum(np.sqrt(np.clip(eigvals, 0.0, None))))
    diff = mu1 - mu2
    distance = float(diff @ diff + np.trace(sigma1) + np.trace(sigma2) - 2.0 * tr_covmean)
    if distance < 0.0:
        _LOGGER.debug(f"Clamping slightly negative Frechet distance {distance:.3e} to 0.")
    return max(distance, 0.0)


def fid(real: FeatureSet, generated: FeatureSet) -> float:
    """Frechet distance between Gaussians fitted to two feature sets."""
    if real.dim != generated.dim:
        raise MetricsException(f"Feature widths differ: {real.dim} vs {generated.dim}")
    mu1, sigma1 = real.gaussian()
    mu2, sigma2 = generated.gaussian()
    return frechet_distance(mu1, sigma1, mu2, sigma2)
