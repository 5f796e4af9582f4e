"""somscreen: self-organizing-map outlier screening for phase-image patches.

Train a Kohonen map on inlier morphology features and flag
out-of-distribution samples by their quantization error.
"""

from .detector import (
    DEFAULT_BINS,
    ScoreRecord,
    SomOutlierDetector,
    bin_errors,
    bin_label,
    classify,
    fit_threshold,
    hit_map,
    separation_stat,
)
from .exceptions import (
    ConfigError,
    DegenerateDataError,
    EmptySegmentationError,
    ModelFormatError,
)
from .features import (
    FEATURE_NAMES,
    FeatureNormalizer,
    extract_features,
    otsu_threshold,
    patch_features,
    segment,
)
from .io import load_model, read_patch, save_model, write_patch
from .phantoms import PhantomSpec, generate, generate_dataset, generate_samples
from .som import (
    BmuResult,
    SelfOrganizingMap,
    average_quantization_error,
    compute_eigen_ratio,
    distance_map,
    find_bmu,
    gaussian_neighborhood,
    neighborhood_weight,
    plane_positions,
    quantization_errors,
    size_lattice,
)

__version__ = "0.1.0"

__all__ = [
    "BmuResult",
    "ConfigError",
    "DEFAULT_BINS",
    "DegenerateDataError",
    "EmptySegmentationError",
    "FEATURE_NAMES",
    "FeatureNormalizer",
    "ModelFormatError",
    "PhantomSpec",
    "ScoreRecord",
    "SelfOrganizingMap",
    "SomOutlierDetector",
    "average_quantization_error",
    "bin_errors",
    "bin_label",
    "classify",
    "compute_eigen_ratio",
    "distance_map",
    "extract_features",
    "find_bmu",
    "fit_threshold",
    "gaussian_neighborhood",
    "generate",
    "generate_dataset",
    "generate_samples",
    "hit_map",
    "load_model",
    "neighborhood_weight",
    "otsu_threshold",
    "patch_features",
    "plane_positions",
    "quantization_errors",
    "read_patch",
    "save_model",
    "segment",
    "separation_stat",
    "size_lattice",
    "write_patch",
]
