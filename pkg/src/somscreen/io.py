"""File formats: SOMODEL v1 model files, patches, manifests, and CSVs.

All files are UTF-8 text with LF endings.  Floats are written in Python's
shortest round-trip representation, so save -> load -> save is
byte-identical.
"""

import csv
from pathlib import Path

import numpy as np
from sklearn.utils.validation import check_is_fitted

from .detector import ScoreRecord, SomOutlierDetector
from .exceptions import ModelFormatError
from .features import FEATURE_NAMES, FeatureNormalizer
from .som import SelfOrganizingMap, plane_positions
from .validation import PATCH_SIZE, as_float_array, check_patch

_TOPOLOGY_TOKEN = {"rectangular": "rect", "hexagonal": "hex"}
_TOKEN_TOPOLOGY = {v: k for k, v in _TOPOLOGY_TOKEN.items()}

MAGIC = "SOMODEL v1"


def fmt(value) -> str:
    """Shortest decimal representation that round-trips to the same float."""
    return repr(float(value))


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# model files


def _fitted_som_lines(som):
    check_is_fitted(som, "weights_")
    lines = [
        MAGIC,
        f"topology {_TOPOLOGY_TOKEN[som.topology]}",
        f"rows {som.rows_}",
        f"cols {som.cols_}",
        f"dim {som.n_features_in_}",
    ]
    lines.extend(",".join(fmt(v) for v in row) for row in som.weights_)
    return lines


def save_model(path, model) -> None:
    """Write a fitted SelfOrganizingMap or SomOutlierDetector to ``path``."""
    if isinstance(model, SomOutlierDetector):
        lines = _fitted_som_lines(model.som_)
        lines.append("features " + ",".join(model.feature_names_))
        lines.append("norm_min " + " ".join(fmt(v) for v in model.normalizer_.min_))
        lines.append("norm_max " + " ".join(fmt(v) for v in model.normalizer_.max_))
        lines.append("threshold " + fmt(model.threshold_))
    elif isinstance(model, SelfOrganizingMap):
        lines = _fitted_som_lines(model)
    else:
        raise TypeError(f"cannot save model of type {type(model).__name__}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _parse_header_line(lines, index, key):
    if index >= len(lines):
        raise ModelFormatError(f"line {index + 1}: missing '{key}' line")
    parts = lines[index].split()
    if len(parts) != 2 or parts[0] != key:
        raise ModelFormatError(f"line {index + 1}: expected '{key} <value>'")
    return parts[1]


def load_model(path):
    """Read a SOMODEL v1 file.

    Returns a fitted SomOutlierDetector when the detector sections are
    present, otherwise a fitted SelfOrganizingMap.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise ModelFormatError(f"line 1: expected '{MAGIC}' header")
    token = _parse_header_line(lines, 1, "topology")
    if token not in _TOKEN_TOPOLOGY:
        raise ModelFormatError(f"line 2: unknown topology {token!r}")
    topology = _TOKEN_TOPOLOGY[token]
    try:
        rows = int(_parse_header_line(lines, 2, "rows"))
        cols = int(_parse_header_line(lines, 3, "cols"))
        dim = int(_parse_header_line(lines, 4, "dim"))
    except ValueError as exc:
        raise ModelFormatError(f"bad lattice header: {exc}") from None
    if rows < 1 or cols < 1 or dim < 1:
        raise ModelFormatError("rows, cols, and dim must be positive")

    n_units = rows * cols
    if len(lines) < 5 + n_units:
        raise ModelFormatError(f"expected {n_units} weight lines, got {len(lines) - 5}")
    weights = np.empty((n_units, dim), dtype=np.float64)
    for j in range(n_units):
        parts = lines[5 + j].split(",")
        if len(parts) != dim:
            raise ModelFormatError(
                f"line {6 + j}: expected {dim} comma-separated values"
            )
        try:
            weights[j] = [float(p) for p in parts]
        except ValueError as exc:
            raise ModelFormatError(f"line {6 + j}: {exc}") from None

    extras = {}
    for offset, line in enumerate(lines[5 + n_units :]):
        if not line.strip():
            continue
        key, _, value = line.partition(" ")
        if key not in ("features", "norm_min", "norm_max", "threshold"):
            raise ModelFormatError(f"line {6 + n_units + offset}: unknown section {key!r}")
        if key in extras:
            raise ModelFormatError(f"line {6 + n_units + offset}: duplicate section {key!r}")
        extras[key] = value

    som = SelfOrganizingMap(rows=rows, cols=cols, topology=topology)
    som.rows_ = rows
    som.cols_ = cols
    som.n_features_in_ = dim
    som.weights_ = weights
    som.positions_ = plane_positions(rows, cols, topology)

    detector_keys = {"norm_min", "norm_max", "threshold"}
    present = detector_keys & extras.keys()
    if not present:
        if "features" in extras:
            raise ModelFormatError("features section requires the detector sections")
        return som
    if present != detector_keys:
        raise ModelFormatError(
            f"incomplete detector sections: missing {sorted(detector_keys - present)}"
        )
    try:
        norm_min = np.array([float(v) for v in extras["norm_min"].split()])
        norm_max = np.array([float(v) for v in extras["norm_max"].split()])
        threshold = float(extras["threshold"])
    except ValueError as exc:
        raise ModelFormatError(f"bad detector section: {exc}") from None
    if norm_min.shape != (dim,) or norm_max.shape != (dim,):
        raise ModelFormatError("norm_min/norm_max length must equal dim")

    normalizer = FeatureNormalizer()
    normalizer.min_ = norm_min
    normalizer.max_ = norm_max
    normalizer.degenerate_ = np.zeros(dim, dtype=bool)
    normalizer.n_features_in_ = dim

    detector = SomOutlierDetector()
    detector.som_ = som
    detector.normalizer_ = normalizer
    detector.threshold_ = threshold
    detector.n_features_in_ = dim
    detector.training_qe_ = None
    names = extras.get("features", ",".join(FEATURE_NAMES)).split(",")
    detector.feature_names_ = names
    return detector


# ---------------------------------------------------------------------------
# patch files


def write_patch(path, pixels) -> None:
    """50 lines of 50 space-separated phase values."""
    pixels = check_patch(pixels)
    lines = (" ".join(fmt(v) for v in row) for row in pixels)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_patch(path) -> np.ndarray:
    rows = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split()
        if len(parts) != PATCH_SIZE:
            raise ValueError(f"{path}: line {i}: expected {PATCH_SIZE} values, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"{path}: line {i}: {exc}") from None
    if len(rows) != PATCH_SIZE:
        raise ValueError(f"{path}: expected {PATCH_SIZE} lines, got {len(rows)}")
    return np.array(rows, dtype=np.float64)


# ---------------------------------------------------------------------------
# CSV formats


def _open_writer(path):
    handle = open(path, "w", encoding="utf-8", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


def write_manifest(path, rows) -> None:
    """Manifest CSV: path,id,label (label may be empty)."""
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["path", "id", "label"])
        for patch_path, sample_id, label in rows:
            writer.writerow([patch_path, sample_id, label or ""])


def read_manifest(path):
    """Rows of (path, id, label or None)."""
    rows = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["path", "id", "label"]:
            raise ValueError(f"{path}: line 1: expected header 'path,id,label'")
        for i, row in enumerate(reader, 2):
            if len(row) != 3:
                raise ValueError(f"{path}: line {i}: expected 3 fields, got {len(row)}")
            rows.append((row[0], row[1], row[2] or None))
    return rows


def write_features_csv(path, ids, labels, X) -> None:
    X = as_float_array(X, "X")
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["id", "label", *FEATURE_NAMES])
        for sample_id, label, row in zip(ids, labels, X):
            writer.writerow([sample_id, label or "", *(fmt(v) for v in row)])


def read_features_csv(path):
    """Returns (ids, labels, X) with X of shape (n, 6)."""
    expected = ["id", "label", *FEATURE_NAMES]
    ids, labels, data = [], [], []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != expected:
            raise ValueError(f"{path}: line 1: expected header {','.join(expected)!r}")
        for i, row in enumerate(reader, 2):
            if len(row) != len(expected):
                raise ValueError(
                    f"{path}: line {i}: expected {len(expected)} fields, got {len(row)}"
                )
            try:
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ValueError(f"{path}: line {i}: {exc}") from None
            ids.append(row[0])
            labels.append(row[1] or None)
            data.append(values)
    X = np.array(data, dtype=np.float64) if data else np.empty((0, len(FEATURE_NAMES)))
    return ids, labels, X


def write_scores_csv(path, records) -> None:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["id", "label", "qe", "bmu_row", "bmu_col", "verdict", "bin"])
        for r in records:
            writer.writerow(
                [r.id, r.label or "", fmt(r.qe), r.bmu_row, r.bmu_col, r.verdict, r.bin]
            )


def read_scores_csv(path):
    expected = ["id", "label", "qe", "bmu_row", "bmu_col", "verdict", "bin"]
    records = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != expected:
            raise ValueError(f"{path}: line 1: expected header {','.join(expected)!r}")
        for i, row in enumerate(reader, 2):
            if len(row) != len(expected):
                raise ValueError(
                    f"{path}: line {i}: expected {len(expected)} fields, got {len(row)}"
                )
            try:
                records.append(
                    ScoreRecord(
                        id=row[0],
                        label=row[1] or None,
                        qe=float(row[2]),
                        bmu_row=int(row[3]),
                        bmu_col=int(row[4]),
                        verdict=row[5],
                        bin=row[6],
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}: line {i}: {exc}") from None
    return records
