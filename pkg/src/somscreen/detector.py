"""Quantization-error gating, score records, and lattice occupancy analysis.

A sample is an outlier when its distance to the best matching unit exceeds
a gate fitted on the training errors: mean + 2 * population std by default
(``gate='mean_plus_2std'``), or plain 2 * std (``gate='two_std'``).
Comparison at the gate is strict, so boundary samples count as inliers.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin, clone
from sklearn.utils.validation import check_is_fitted

from .features import FEATURE_NAMES, FeatureNormalizer
from .som import SelfOrganizingMap
from .validation import as_float_array, check_feature_matrix

GATE_MODES = ("mean_plus_2std", "two_std")

# quantization-error ranges reported for the screened datasets; values in
# the gaps between ranges fall into the catch-all "other"
DEFAULT_BINS = (
    ("0.0-0.1", 0.0, 0.1),
    ("0.5-0.6", 0.5, 0.6),
    ("1.0-2.0", 1.0, 2.0),
    ("3.0-4.0", 3.0, 4.0),
    ("10.0-20.0", 10.0, 20.0),
    ("30.0-100.0", 30.0, 100.0),
)

OTHER_BIN = "other"


@dataclass
class ScoreRecord:
    """Outcome of scoring one sample against a fitted detector."""

    id: str
    label: Optional[str]
    qe: float
    bmu_row: int
    bmu_col: int
    verdict: str  # "inlier" or "outlier"
    bin: str


def fit_threshold(training_qes, gate: str = "mean_plus_2std") -> float:
    """Outlier gate from the training quantization errors."""
    qes = as_float_array(training_qes, "training_qes").ravel()
    if qes.size < 2:
        raise ValueError(f"need at least 2 quantization errors, got {qes.size}")
    if gate not in GATE_MODES:
        raise ValueError(f"gate must be one of {GATE_MODES}, got {gate!r}")
    std = float(np.std(qes))
    if gate == "two_std":
        return 2.0 * std
    return float(np.mean(qes)) + 2.0 * std


def classify(qe: float, threshold: float) -> str:
    """Verdict for one quantization error; strict inequality at the gate."""
    if not (np.isfinite(qe) and np.isfinite(threshold)):
        raise ValueError("qe and threshold must be finite")
    return "outlier" if qe > threshold else "inlier"


def bin_label(qe: float, bins=DEFAULT_BINS) -> str:
    """Name of the half-open [lo, hi) bin containing ``qe``, else "other"."""
    for name, lo, hi in bins:
        if lo <= qe < hi:
            return name
    return OTHER_BIN


def bin_errors(records, bins=DEFAULT_BINS) -> dict:
    """Histogram of records per named bin (every configured bin present)."""
    counts = {name: 0 for name, _, _ in bins}
    counts[OTHER_BIN] = 0
    for record in records:
        counts[bin_label(record.qe, bins)] += 1
    return counts


_RESERVED_BIN_NAMES = frozenset({OTHER_BIN, "underflow", "overflow"})


def validate_bins(bins):
    """Check bin tuples are well-formed: named, lo < hi, non-overlapping."""
    names = [name for name, _, _ in bins]
    if len(set(names)) != len(names):
        raise ValueError("bin names must be unique")
    for name in names:
        if not name or name in _RESERVED_BIN_NAMES:
            raise ValueError(f"bin name {name!r} is empty or reserved")
    spans = sorted((lo, hi, name) for name, lo, hi in bins)
    for lo, hi, name in spans:
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"bin {name!r} must satisfy lo < hi")
    for (_, prev_hi, prev_name), (lo, _, name) in zip(spans, spans[1:]):
        if lo < prev_hi:
            raise ValueError(f"bins {prev_name!r} and {name!r} overlap")
    return tuple((name, float(lo), float(hi)) for name, lo, hi in bins)


def hit_map(records, rows: int, cols: int, group_by: str = "label") -> dict:
    """Per-group BMU occupancy counts over the lattice.

    ``group_by`` is "label" or "verdict".  Returns {group: (rows, cols) int
    grid}; groups appear in first-seen order, missing labels grouped under
    "unlabeled".
    """
    if group_by not in ("label", "verdict"):
        raise ValueError(f"group_by must be 'label' or 'verdict', got {group_by!r}")
    maps: dict = {}
    for record in records:
        key = record.label if group_by == "label" else record.verdict
        if not key:
            key = "unlabeled"
        if key not in maps:
            maps[key] = np.zeros((rows, cols), dtype=np.int64)
        if not (0 <= record.bmu_row < rows and 0 <= record.bmu_col < cols):
            raise ValueError(
                f"record {record.id!r} BMU ({record.bmu_row}, {record.bmu_col}) "
                f"outside {rows}x{cols} lattice"
            )
        maps[key][record.bmu_row, record.bmu_col] += 1
    return maps


def _weighted_median(values, weights) -> float:
    order = np.argsort(values, kind="stable")
    values = values[order]
    weights = weights[order]
    cumulative = np.cumsum(weights)
    cut = 0.5 * cumulative[-1]
    return float(values[np.searchsorted(cumulative, cut)])


def separation_stat(dmap, inlier_hits, outlier_hits) -> float:
    """Occupancy-weighted median distance-map gap between the hit groups.

    Positive when outliers land on cells with larger neighbor distances
    (sparser map regions) than inliers do.
    """
    dmap = as_float_array(dmap, "dmap")
    inlier_hits = np.asarray(inlier_hits)
    outlier_hits = np.asarray(outlier_hits)
    if inlier_hits.shape != dmap.shape or outlier_hits.shape != dmap.shape:
        raise ValueError("hit map shapes must match the distance map")
    if inlier_hits.sum() == 0 or outlier_hits.sum() == 0:
        raise ValueError("both hit maps must contain at least one hit")
    cells = dmap.ravel()
    inlier_median = _weighted_median(cells, inlier_hits.ravel().astype(np.float64))
    outlier_median = _weighted_median(cells, outlier_hits.ravel().astype(np.float64))
    return outlier_median - inlier_median


class SomOutlierDetector(BaseEstimator, OutlierMixin):
    """Screen feature vectors with a SOM trained on inliers.

    fit() takes raw (unnormalized) feature rows assumed to be inliers:
    it fits the range normalizer, trains the map on the normalized data,
    and sets the quantization-error gate from the training errors.

    predict() follows the scikit-learn outlier convention (+1 inlier,
    -1 outlier); the string verdicts used in score files come from
    :meth:`score_records`.

    Parameters
    ----------
    som : SelfOrganizingMap or None
        Template estimator, cloned at fit time.  None uses the defaults
        (auto-sized hexagonal grid, sigma 1, learning rate 1).
    gate : {'mean_plus_2std', 'two_std'}
    bins : sequence of (name, lo, hi), or None for DEFAULT_BINS.
    """

    def __init__(self, som=None, gate="mean_plus_2std", bins=None):
        self.som = som
        self.gate = gate
        self.bins = bins

    def _bins(self):
        return validate_bins(DEFAULT_BINS if self.bins is None else self.bins)

    def fit(self, X, y=None):
        X = check_feature_matrix(X, min_samples=2)
        self._bins()
        self.normalizer_ = FeatureNormalizer().fit(X)
        normalized = self.normalizer_.transform(X)
        template = self.som if self.som is not None else SelfOrganizingMap()
        self.som_ = clone(template).fit(normalized)
        self.training_qe_ = self.som_.quantization_errors(normalized)
        self.threshold_ = fit_threshold(self.training_qe_, self.gate)
        self.n_features_in_ = X.shape[1]
        self.feature_names_ = list(FEATURE_NAMES)
        return self

    def quantization_errors(self, X, normalized: bool = False) -> np.ndarray:
        """Per-sample QE; set ``normalized=True`` for pre-normalized rows."""
        check_is_fitted(self, "som_")
        X = check_feature_matrix(X, dim=self.n_features_in_)
        if not normalized:
            X = self.normalizer_.transform(X)
        return self.som_.quantization_errors(X)

    def decision_function(self, X) -> np.ndarray:
        """threshold - qe: positive inside the gate, negative outside."""
        return self.threshold_ - self.quantization_errors(X)

    def score_samples(self, X) -> np.ndarray:
        """Negated quantization error (higher means more inlier-like)."""
        return -self.quantization_errors(X)

    def predict(self, X) -> np.ndarray:
        return np.where(self.quantization_errors(X) > self.threshold_, -1, 1)

    def score_records(self, X, ids=None, labels=None, normalized: bool = False):
        """Full scoring: QE, BMU cell, verdict, and error bin per sample.

        Output order matches input order.
        """
        check_is_fitted(self, "som_")
        X = check_feature_matrix(X, dim=self.n_features_in_) if len(X) else np.empty((0, self.n_features_in_))
        bins = self._bins()
        if ids is None:
            ids = [str(i) for i in range(X.shape[0])]
        if labels is None:
            labels = [None] * X.shape[0]
        if len(ids) != X.shape[0] or len(labels) != X.shape[0]:
            raise ValueError("ids and labels must match the number of samples")
        if X.shape[0] == 0:
            return []
        normalized_X = X if normalized else self.normalizer_.transform(X)
        qes = self.som_.quantization_errors(normalized_X)
        coords = self.som_.bmu_coords(normalized_X)
        return [
            ScoreRecord(
                id=str(sample_id),
                label=label,
                qe=float(qe),
                bmu_row=int(row),
                bmu_col=int(col),
                verdict=classify(float(qe), self.threshold_),
                bin=bin_label(float(qe), bins),
            )
            for sample_id, label, qe, (row, col) in zip(ids, labels, qes, coords)
        ]
