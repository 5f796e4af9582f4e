"""Self-organizing map: lattice geometry, online training, and map diagnostics.

The map is a rows x cols grid of units, each holding a weight vector in
feature space.  Units are indexed row-major: unit ``j`` sits at grid cell
``(j // cols, j % cols)``.  Lattice-space distances are Euclidean distances
between plane positions, which differ between rectangular and hexagonal
grids (hexagonal rows are offset and vertically compressed).
"""

import math
import warnings
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateDataError
from .validation import check_feature_matrix, check_positive, check_vector

TOPOLOGIES = ("rectangular", "hexagonal")

_EIGEN_FLOOR = 1e-12


class BmuResult(NamedTuple):
    """Best matching unit: flat index and Euclidean distance to the input."""

    index: int
    distance: float


def _round_half_up(x: float) -> int:
    # round-half-away-from-zero for non-negative x; round() would go to even
    return int(math.floor(x + 0.5))


def size_lattice(n_samples: int, eigen_ratio: float) -> tuple[int, int]:
    """Choose a grid shape with about 5 * sqrt(n_samples) units.

    The height/width ratio follows ``eigen_ratio``, the ratio of the two
    largest eigenvalues of the data autocorrelation matrix (see
    :func:`compute_eigen_ratio`).  Both dimensions are clamped to >= 2.
    """
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 1:
        raise ValueError(f"n_samples must be a positive integer, got {n_samples!r}")
    eigen_ratio = check_positive(eigen_ratio, "eigen_ratio")
    target = _round_half_up(5.0 * math.sqrt(n_samples))
    rows = _round_half_up(math.sqrt(target * eigen_ratio))
    cols = _round_half_up(math.sqrt(target / eigen_ratio))
    return max(rows, 2), max(cols, 2)


def compute_eigen_ratio(X) -> float:
    """Ratio of the two largest eigenvalues of the autocorrelation matrix.

    The autocorrelation matrix is the uncentered second moment
    ``(1/M) * sum_i x_i x_i^T``.  Raises :class:`DegenerateDataError` when the
    second eigenvalue is (numerically) zero, e.g. for rank-1 data.
    """
    X = check_feature_matrix(X, min_samples=2)
    if X.shape[1] < 2:
        raise ValueError("eigen ratio needs at least 2 features")
    autocorr = X.T @ X / X.shape[0]
    eigenvalues = np.linalg.eigvalsh(autocorr)
    lam1, lam2 = eigenvalues[-1], eigenvalues[-2]
    if lam2 <= _EIGEN_FLOOR:
        raise DegenerateDataError(
            f"second eigenvalue {lam2:g} is too small for a stable aspect ratio"
        )
    return float(lam1 / lam2)


def plane_positions(rows: int, cols: int, topology: str = "rectangular") -> np.ndarray:
    """Plane coordinates of every unit, shape (rows * cols, 2), row-major.

    Rectangular: cell (r, c) sits at (c, r).  Hexagonal: odd rows shift
    +0.5 in x and the row pitch is sqrt(3)/2, so all six surrounding units
    are at plane distance 1.
    """
    if topology not in TOPOLOGIES:
        raise ValueError(f"topology must be one of {TOPOLOGIES}, got {topology!r}")
    r, c = np.divmod(np.arange(rows * cols), cols)
    if topology == "hexagonal":
        x = c + 0.5 * (r % 2)
        y = r * (math.sqrt(3.0) / 2.0)
    else:
        x = c.astype(np.float64)
        y = r.astype(np.float64)
    return np.column_stack((x, y)).astype(np.float64)


def find_bmu(weights, x) -> BmuResult:
    """Index and distance of the unit closest to ``x`` (lowest index on ties)."""
    weights = check_feature_matrix(weights, name="weights")
    x = check_vector(x, dim=weights.shape[1])
    distances = np.sqrt(((weights - x) ** 2).sum(axis=1))
    index = int(np.argmin(distances))
    return BmuResult(index, float(distances[index]))


def gaussian_neighborhood(positions, bmu_index: int, sigma: float) -> np.ndarray:
    """Gaussian kernel exp(-D^2 / (2 sigma^2)) over plane distances to the BMU."""
    positions = np.asarray(positions, dtype=np.float64)
    if not 0 <= bmu_index < positions.shape[0]:
        raise ValueError(f"bmu_index {bmu_index} out of range for {positions.shape[0]} units")
    sigma = check_positive(sigma, "sigma")
    sq = ((positions - positions[bmu_index]) ** 2).sum(axis=1)
    return np.exp(-sq / (2.0 * sigma * sigma))


def neighborhood_weight(positions, j: int, bmu_index: int, sigma: float) -> float:
    """Kernel value for a single unit ``j`` relative to the BMU."""
    positions = np.asarray(positions, dtype=np.float64)
    if not 0 <= j < positions.shape[0]:
        raise ValueError(f"unit index {j} out of range for {positions.shape[0]} units")
    return float(gaussian_neighborhood(positions, bmu_index, sigma)[j])


def unit_distances(weights, X) -> np.ndarray:
    """Euclidean distances from each sample to every unit, shape (n, J)."""
    weights = np.asarray(weights, dtype=np.float64)
    X = check_feature_matrix(X, dim=weights.shape[1])
    return np.sqrt(((X[:, None, :] - weights[None, :, :]) ** 2).sum(axis=2))


def quantization_errors(weights, X, chunk: int = 2048) -> np.ndarray:
    """Per-sample distance to the best matching unit."""
    weights = np.asarray(weights, dtype=np.float64)
    X = check_feature_matrix(X, dim=weights.shape[1])
    out = np.empty(X.shape[0], dtype=np.float64)
    for start in range(0, X.shape[0], chunk):
        block = X[start : start + chunk]
        out[start : start + block.shape[0]] = unit_distances(weights, block).min(axis=1)
    return out


def average_quantization_error(weights, X) -> float:
    """Arithmetic mean of the per-sample quantization errors."""
    X = check_feature_matrix(X, min_samples=1)
    return float(np.mean(quantization_errors(weights, X)))


def _neighbor_mask(rows: int, cols: int, topology: str) -> np.ndarray:
    """Boolean (J, J) adjacency: rectangular uses the 8 surrounding cells,
    hexagonal the (up to) 6 units at plane distance 1."""
    if topology == "rectangular":
        r, c = np.divmod(np.arange(rows * cols), cols)
        dr = np.abs(r[:, None] - r[None, :])
        dc = np.abs(c[:, None] - c[None, :])
        mask = (dr <= 1) & (dc <= 1)
    else:
        pos = plane_positions(rows, cols, topology)
        sq = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=2)
        mask = np.abs(sq - 1.0) < 1e-9
    np.fill_diagonal(mask, False)
    return mask


def distance_map(weights, rows: int, cols: int, topology: str = "rectangular") -> np.ndarray:
    """Mean weight-space distance of each unit to its lattice neighbors.

    The raw grid is normalized by its maximum, so values lie in [0, 1];
    a constant-weight lattice maps to all zeros.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[0] != rows * cols:
        raise ValueError(
            f"weights has {weights.shape[0]} rows, expected rows*cols={rows * cols}"
        )
    mask = _neighbor_mask(rows, cols, topology)
    pair = np.sqrt(((weights[:, None, :] - weights[None, :, :]) ** 2).sum(axis=2))
    raw = (pair * mask).sum(axis=1) / mask.sum(axis=1)
    peak = raw.max()
    if peak > 0:
        raw = raw / peak
    return raw.reshape(rows, cols)


def random_uniform_init(X, n_units: int, seed) -> np.ndarray:
    """Weights drawn uniformly from the per-feature [min, max] of the data."""
    X = check_feature_matrix(X)
    rng = np.random.default_rng(seed)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    return rng.uniform(lo, hi, size=(n_units, X.shape[1]))


def pca_plane_init(X, rows: int, cols: int) -> np.ndarray:
    """Weights spanning the plane of the top two principal components.

    Cell (r, c) gets ``mean + a_r*sqrt(l1)*u1 + b_c*sqrt(l2)*u2`` with a_r and
    b_c linearly spaced over [-1, 1] down the rows and across the columns.
    Raises :class:`DegenerateDataError` when the data has fewer than two
    principal directions with nonzero variance.
    """
    X = check_feature_matrix(X, min_samples=2)
    if X.shape[1] < 2:
        raise DegenerateDataError("pca_plane needs at least 2 features")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / X.shape[0]
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    lam1, lam2 = eigenvalues[-1], eigenvalues[-2]
    if lam2 <= _EIGEN_FLOOR:
        raise DegenerateDataError(
            f"second principal variance {lam2:g} is too small for a plane"
        )
    u1 = _fix_sign(eigenvectors[:, -1])
    u2 = _fix_sign(eigenvectors[:, -2])
    a = np.linspace(-1.0, 1.0, rows)
    b = np.linspace(-1.0, 1.0, cols)
    grid = (
        mean
        + a[:, None, None] * math.sqrt(lam1) * u1
        + b[None, :, None] * math.sqrt(lam2) * u2
    )
    return grid.reshape(rows * cols, X.shape[1])


def _fix_sign(u: np.ndarray) -> np.ndarray:
    # eigh gives an arbitrary sign; make the largest-magnitude component positive
    pivot = int(np.argmax(np.abs(u)))
    return -u if u[pivot] < 0 else u


def _asymptotic(initial: float, n: int, n_iter: int) -> float:
    return initial / (1.0 + n / (n_iter / 2.0))


class SelfOrganizingMap(BaseEstimator):
    """Online-trained Kohonen map with a Gaussian neighborhood kernel.

    Parameters
    ----------
    rows, cols : int or None
        Grid shape.  Leave both as None to size the grid automatically from
        the data (about 5*sqrt(n_samples) units, aspect from the
        autocorrelation eigen ratio).
    n_iter : int or None
        Training iterations.  None means 10 * n_samples.
    sigma : float
        Initial neighborhood radius (in plane-position units).
    learning_rate : float
        Initial learning rate, in (0, 1].
    topology : {'hexagonal', 'rectangular'}
    init : {'random_uniform', 'pca_plane'}
        Weight initialization.  pca_plane falls back to random_uniform (with
        a warning and ``init_fallback_`` set) on degenerate data.
    sigma_decay : {'asymptotic', 'constant'}
        Whether the neighborhood radius follows the same asymptotic decay as
        the learning rate or stays fixed.
    random_state : int
        Seed for weight initialization and sample draws; fitting is fully
        deterministic given the same data and parameters.

    Attributes
    ----------
    weights_ : ndarray of shape (rows_ * cols_, n_features), row-major.
    rows_, cols_ : fitted grid shape.
    positions_ : plane positions of all units, shape (rows_ * cols_, 2).
    init_fallback_ : True when pca_plane init fell back to random_uniform.
    """

    def __init__(
        self,
        rows=None,
        cols=None,
        n_iter=None,
        sigma=1.0,
        learning_rate=1.0,
        topology="hexagonal",
        init="random_uniform",
        sigma_decay="asymptotic",
        random_state=0,
    ):
        self.rows = rows
        self.cols = cols
        self.n_iter = n_iter
        self.sigma = sigma
        self.learning_rate = learning_rate
        self.topology = topology
        self.init = init
        self.sigma_decay = sigma_decay
        self.random_state = random_state

    def _validate_params(self, n_samples):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.init not in ("random_uniform", "pca_plane"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.sigma_decay not in ("asymptotic", "constant"):
            raise ValueError(f"unknown sigma_decay {self.sigma_decay!r}")
        check_positive(self.sigma, "sigma")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate!r}")
        if (self.rows is None) != (self.cols is None):
            raise ValueError("rows and cols must be given together or both left as None")
        n_iter = self.n_iter if self.n_iter is not None else 10 * n_samples
        if int(n_iter) < 1:
            raise ValueError(f"n_iter must be >= 1, got {n_iter!r}")
        return int(n_iter)

    def _grid_shape(self, X):
        if self.rows is not None:
            if self.rows < 1 or self.cols < 1:
                raise ValueError("rows and cols must be positive")
            return int(self.rows), int(self.cols)
        if X.shape[0] < 2 or X.shape[1] < 2:
            return size_lattice(X.shape[0], 1.0)
        try:
            ratio = compute_eigen_ratio(X)
        except DegenerateDataError:
            ratio = 1.0
        return size_lattice(X.shape[0], ratio)

    def _initial_weights(self, X, rows, cols):
        self.init_fallback_ = False
        if self.init == "pca_plane":
            try:
                return pca_plane_init(X, rows, cols)
            except DegenerateDataError as exc:
                warnings.warn(
                    f"pca_plane init failed ({exc}); falling back to random_uniform"
                )
                self.init_fallback_ = True
        return random_uniform_init(X, rows * cols, self.random_state)

    def fit(self, X, y=None):
        """Train the map on X with the online update rule."""
        X = check_feature_matrix(X, min_samples=1)
        n_iter = self._validate_params(X.shape[0])
        rows, cols = self._grid_shape(X)
        weights = self._initial_weights(X, rows, cols)
        positions = plane_positions(rows, cols, self.topology)

        rng = np.random.default_rng(self.random_state)
        half = n_iter / 2.0
        for n in range(n_iter):
            x = X[int(rng.integers(0, X.shape[0]))]
            distances = np.sqrt(((weights - x) ** 2).sum(axis=1))
            bmu = int(np.argmin(distances))
            alpha = self.learning_rate / (1.0 + n / half)
            if self.sigma_decay == "asymptotic":
                sigma = self.sigma / (1.0 + n / half)
            else:
                sigma = self.sigma
            sq = ((positions - positions[bmu]) ** 2).sum(axis=1)
            h = np.exp(-sq / (2.0 * sigma * sigma))
            weights += (alpha * h)[:, None] * (x - weights)

        self.rows_ = rows
        self.cols_ = cols
        self.n_features_in_ = X.shape[1]
        self.weights_ = weights
        self.positions_ = positions
        return self

    def predict(self, X) -> np.ndarray:
        """Flat BMU index for each sample (lowest index on ties)."""
        check_is_fitted(self, "weights_")
        return unit_distances(self.weights_, X).argmin(axis=1)

    def transform(self, X) -> np.ndarray:
        """Distances from each sample to every unit, shape (n, rows_*cols_)."""
        check_is_fitted(self, "weights_")
        return unit_distances(self.weights_, X)

    def bmu_coords(self, X) -> np.ndarray:
        """Grid coordinates (row, col) of each sample's BMU, shape (n, 2)."""
        flat = self.predict(X)
        return np.column_stack(np.divmod(flat, self.cols_))

    def quantization_errors(self, X) -> np.ndarray:
        check_is_fitted(self, "weights_")
        return quantization_errors(self.weights_, X)

    def average_quantization_error(self, X) -> float:
        check_is_fitted(self, "weights_")
        return average_quantization_error(self.weights_, X)

    def distance_map(self) -> np.ndarray:
        """Normalized neighbor-distance grid (the U-matrix), shape (rows_, cols_)."""
        check_is_fitted(self, "weights_")
        return distance_map(self.weights_, self.rows_, self.cols_, self.topology)
