"""Morphological features of segmented phase-image patches.

A patch is a 50x50 grid of optical phase values.  Segmentation keeps the
largest 8-connected component above a threshold; six features are then
measured on the masked phase values:

    area                      foreground pixel count
    circularity               4*pi*area / perimeter^2 (uncapped)
    equivalent_diameter       sqrt(4*area/pi)
    optical_height_max        max phase inside the mask
    optical_height_variance   population variance of phase inside the mask
    energy                    sum of squared phase inside the mask

The perimeter is the number of mask pixels exposed on at least one
4-neighbor side (or lying on the patch border), each counted once.
"""

import math

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import EmptySegmentationError
from .validation import as_float_array, check_feature_matrix, check_patch

FEATURE_NAMES = (
    "area",
    "circularity",
    "equivalent_diameter",
    "optical_height_max",
    "optical_height_variance",
    "energy",
)

N_FEATURES = len(FEATURE_NAMES)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def segment(pixels, threshold: float) -> np.ndarray:
    """Threshold a patch and keep the largest 8-connected component.

    Returns a boolean mask (possibly empty).  Among equally large components
    the one encountered first in row-major scan order wins.
    """
    pixels = check_patch(pixels)
    if not np.isfinite(threshold):
        raise ValueError("threshold must be finite")
    binary = pixels >= threshold
    if not binary.any():
        return binary
    labels, count = ndimage.label(binary, structure=_EIGHT_CONNECTED)
    if count == 1:
        return binary
    sizes = np.bincount(labels.ravel())[1:]
    # bincount order == scan order of first appearance, so argmax keeps the
    # earliest component on ties
    keep = int(np.argmax(sizes)) + 1
    return labels == keep


def otsu_threshold(pixels) -> float:
    """Threshold maximizing between-class variance over a 256-bin histogram.

    Candidate thresholds are the 256 lower bin edges spanning
    [patch min, patch max]; a constant patch returns its value.
    """
    pixels = check_patch(pixels)
    lo = float(pixels.min())
    hi = float(pixels.max())
    if lo == hi:
        return lo
    counts, edges = np.histogram(pixels, bins=256, range=(lo, hi))
    total = counts.sum()
    centers = (edges[:-1] + edges[1:]) / 2.0

    # cut k assigns bins < k to the background class, bins >= k to the
    # foreground, matching the >= rule used by segment() at edge values
    below = np.cumsum(counts)
    mass_below = np.concatenate(([0.0], below[:-1])) / total
    mass_above = 1.0 - mass_below
    weighted = np.cumsum(counts * centers)
    sum_below = np.concatenate(([0.0], weighted[:-1]))
    sum_total = weighted[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_below = sum_below / (mass_below * total)
        mean_above = (sum_total - sum_below) / (mass_above * total)
        variance = mass_below * mass_above * (mean_below - mean_above) ** 2
    variance = np.nan_to_num(variance, nan=0.0)
    return float(edges[int(np.argmax(variance))])


def perimeter_pixels(mask) -> int:
    """Count mask pixels with at least one exposed 4-neighbor side."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return int((mask & ~interior).sum())


def extract_features(pixels, mask) -> np.ndarray:
    """Six-feature vector for one segmented patch, ordered as FEATURE_NAMES."""
    pixels = check_patch(pixels)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != pixels.shape:
        raise ValueError(f"mask shape {mask.shape} does not match patch")
    area = int(mask.sum())
    if area == 0:
        raise EmptySegmentationError("segmentation mask is empty")
    values = pixels[mask]
    perimeter = perimeter_pixels(mask)
    circularity = 4.0 * math.pi * area / perimeter**2
    equivalent_diameter = math.sqrt(4.0 * area / math.pi)
    return np.array(
        [
            float(area),
            circularity,
            equivalent_diameter,
            float(values.max()),
            float(np.var(values)),
            float(np.sum(values**2)),
        ]
    )


class FeatureNormalizer(BaseEstimator, TransformerMixin):
    """Affine rescaling to the [0, 1] range of the fitting (inlier) set.

    transform() is deliberately not clipped: samples outside the fitted
    range land outside [0, 1], which is the signal the outlier gate uses.
    A feature with zero range gets its stored max raised by 1 so the scale
    never divides by zero; ``degenerate_`` records which features that hit.
    """

    def fit(self, X, y=None):
        X = check_feature_matrix(X, min_samples=1)
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        self.degenerate_ = self.min_ == self.max_
        self.max_ = np.where(self.degenerate_, self.max_ + 1.0, self.max_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "min_")
        X = check_feature_matrix(X, dim=self.n_features_in_)
        return (X - self.min_) / (self.max_ - self.min_)


def patch_features(pixels, threshold=None) -> np.ndarray:
    """Segment a patch and extract its features in one step.

    ``threshold=None`` selects the Otsu threshold for the patch.  Raises
    :class:`EmptySegmentationError` when nothing survives segmentation.
    """
    pixels = check_patch(pixels)
    if threshold is None:
        threshold = otsu_threshold(pixels)
    mask = segment(pixels, threshold)
    return extract_features(pixels, mask)


def normalization_stats(X):
    """Per-feature (min, max) over an inlier feature matrix.

    Functional mirror of :class:`FeatureNormalizer`; returns the stored
    vectors after the degenerate-range adjustment.
    """
    norm = FeatureNormalizer().fit(as_float_array(X))
    return norm.min_.copy(), norm.max_.copy()
