"""Command-line pipeline: synth, extract, train, crossval, score, report.

Every command exits 0 on success.  Failures print a single
``error: <message>`` line to stderr and exit nonzero.
"""

import argparse
import sys
from dataclasses import replace
from itertools import product
from pathlib import Path

import numpy as np
from sklearn.model_selection import KFold, StratifiedKFold

from . import io as sio
from .config import PipelineConfig, load_config
from .detector import SomOutlierDetector
from .exceptions import ConfigError, EmptySegmentationError
from .features import FeatureNormalizer, patch_features
from .phantoms import generate_dataset
from .report import write_report
from .som import SelfOrganizingMap

_GRID_KEYS = ("sigma0", "alpha0", "topology", "init", "sigma_decay", "iterations")

DEFAULT_GRID = tuple(
    {"sigma0": s, "alpha0": a, "topology": t}
    for s, a, t in product((0.5, 1.0, 2.0), (0.25, 0.5, 1.0), ("hexagonal", "rectangular"))
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"error: {message}\n")


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=None, help="override train.seed")
    parser.add_argument("--config", default=None, help="flat key = value config file")
    parser.add_argument("--quiet", action="store_true", help="suppress status output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="somscreen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate synthetic phantom patches")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--inliers", type=int, default=100)
    p.add_argument("--outliers-per-kind", type=int, default=25)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract features from a patch manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output feature CSV")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a detector on inlier features")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output model file")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval", help="grid search with k-fold cross-validation")
    p.add_argument("--features", required=True)
    p.add_argument("--grid", default=None, help="grid file (one combination per line)")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--out", required=True, help="output report CSV")
    _add_common(p)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("score", help="score features against a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output scores CSV")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="write histogram, maps, and separation files")
    p.add_argument("--model", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_report)
    return parser


def _load_pipeline_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if args.config is not None:
        config = load_config(args.config, config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _say(args, message):
    if not args.quiet:
        print(message)


def cmd_synth(args, config):
    rows = generate_dataset(args.out, args.inliers, args.outliers_per_kind, config.seed)
    _say(args, f"wrote {len(rows)} patches and manifest to {args.out}")
    return 0


def cmd_extract(args, config):
    manifest = Path(args.manifest)
    rows = sio.read_manifest(manifest)
    ids, labels, vectors = [], [], []
    skipped = 0
    for patch_path, sample_id, label in rows:
        pixels = sio.read_patch(manifest.parent / patch_path)
        try:
            vector = patch_features(pixels, config.segmentation_threshold)
        except EmptySegmentationError:
            skipped += 1
            print(f"skipped {sample_id}: empty segmentation", file=sys.stderr)
            continue
        ids.append(sample_id)
        labels.append(label)
        vectors.append(vector)
    X = np.array(vectors) if vectors else np.empty((0, 6))
    sio.write_features_csv(args.out, ids, labels, X)
    _say(args, f"wrote {len(ids)} feature rows to {args.out} (skipped {skipped})")
    return 0


def _detector_from_config(config) -> SomOutlierDetector:
    return SomOutlierDetector(
        som=SelfOrganizingMap(**config.som_params()),
        gate=config.gate,
        bins=config.bins,
    )


def cmd_train(args, config):
    ids, labels, X = sio.read_features_csv(args.features)
    if X.shape[0] < 2:
        raise ValueError(f"{args.features}: need at least 2 samples to train, got {X.shape[0]}")
    detector = _detector_from_config(config).fit(X)
    sio.save_model(args.out, detector)
    _say(args, f"average_quantization_error {sio.fmt(np.mean(detector.training_qe_))}")
    _say(args, f"threshold {sio.fmt(detector.threshold_)}")
    return 0


def cmd_score(args, config):
    model = sio.load_model(args.model)
    if not isinstance(model, SomOutlierDetector):
        raise ValueError(f"{args.model}: model file has no detector sections")
    model.set_params(bins=config.bins)
    ids, labels, X = sio.read_features_csv(args.features)
    records = model.score_records(X, ids, labels)
    sio.write_scores_csv(args.out, records)
    outliers = sum(1 for r in records if r.verdict == "outlier")
    percentage = 100.0 * outliers / len(records) if records else 0.0
    _say(args, f"outlier_percentage {sio.fmt(percentage)}")
    return 0


def cmd_report(args, config):
    model = sio.load_model(args.model)
    som = model.som_ if isinstance(model, SomOutlierDetector) else model
    records = sio.read_scores_csv(args.scores)
    written = write_report(args.out_dir, som, records, config.bins)
    _say(args, f"wrote {len(written)} report files to {args.out_dir}")
    return 0


# ---------------------------------------------------------------------------
# cross-validation


def parse_grid_file(path):
    """Grid file: one combination per line, comma-separated key=value pairs."""
    points = []
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        point = {}
        for item in line.split(","):
            key, sep, value = (s.strip() for s in item.partition("="))
            if not sep or key not in _GRID_KEYS:
                raise ConfigError(
                    f"{path}: line {number}: {raw.strip()!r}: expected "
                    f"key=value with keys from {_GRID_KEYS}"
                )
            try:
                if key in ("sigma0", "alpha0"):
                    point[key] = float(value)
                elif key == "iterations":
                    point[key] = int(value)
                elif key == "topology":
                    point[key] = {"hex": "hexagonal", "rect": "rectangular"}.get(value, value)
                    if point[key] not in ("hexagonal", "rectangular"):
                        raise ValueError(value)
                elif key == "init":
                    if value not in ("random_uniform", "pca_plane"):
                        raise ValueError(value)
                    point[key] = value
                else:  # sigma_decay
                    if value not in ("asymptotic", "constant"):
                        raise ValueError(value)
                    point[key] = value
            except ValueError:
                raise ConfigError(
                    f"{path}: line {number}: {raw.strip()!r}: bad value for {key}"
                ) from None
        points.append(point)
    if not points:
        raise ConfigError(f"{path}: grid file defines no combinations")
    return points


def _merge_grid_point(config, point) -> PipelineConfig:
    mapping = {
        "sigma0": "sigma",
        "alpha0": "learning_rate",
        "topology": "topology",
        "init": "init",
        "sigma_decay": "sigma_decay",
        "iterations": "iterations",
    }
    return replace(config, **{mapping[k]: v for k, v in point.items()})


def _fold_splits(X, labels, folds, seed):
    y = np.asarray([label or "" for label in labels])
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if all(labels) and np.bincount(np.unique(y, return_inverse=True)[1]).min() >= folds:
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
        return list(splitter.split(X, y))
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    return list(splitter.split(X))


def run_crossval(X, labels, grid, folds, config):
    """Held-out E_AQ per grid point; returns (rows, selected_index)."""
    splits = _fold_splits(X, labels, folds, config.seed)
    rows = []
    for point in grid:
        merged = _merge_grid_point(config, point)
        fold_errors = []
        for train_idx, val_idx in splits:
            normalizer = FeatureNormalizer().fit(X[train_idx])
            som = SelfOrganizingMap(**merged.som_params())
            som.fit(normalizer.transform(X[train_idx]))
            fold_errors.append(
                som.average_quantization_error(normalizer.transform(X[val_idx]))
            )
        rows.append((merged, float(np.mean(fold_errors)), float(np.std(fold_errors))))
    selected = int(np.argmin([mean for _, mean, _ in rows]))
    return rows, selected


def write_crossval_csv(path, rows, selected) -> None:
    lines = ["sigma0,alpha0,topology,init,sigma_decay,iterations,mean_eaq,std_eaq,selected"]
    for i, (merged, mean, std) in enumerate(rows):
        iterations = "" if merged.iterations is None else str(merged.iterations)
        lines.append(
            f"{sio.fmt(merged.sigma)},{sio.fmt(merged.learning_rate)},{merged.topology},"
            f"{merged.init},{merged.sigma_decay},{iterations},"
            f"{sio.fmt(mean)},{sio.fmt(std)},{1 if i == selected else 0}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def cmd_crossval(args, config):
    ids, labels, X = sio.read_features_csv(args.features)
    grid = parse_grid_file(args.grid) if args.grid else list(DEFAULT_GRID)
    folds = args.folds if args.folds is not None else config.folds
    rows, selected = run_crossval(X, labels, grid, folds, config)
    write_crossval_csv(args.out, rows, selected)
    best, mean, _ = rows[selected]
    _say(
        args,
        f"selected sigma0={sio.fmt(best.sigma)} alpha0={sio.fmt(best.learning_rate)} "
        f"topology={best.topology} mean_eaq={sio.fmt(mean)}",
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_pipeline_config(args)
        return args.func(args, config)
    except (ValueError, OSError) as exc:
        message = " ".join(str(exc).split()) or type(exc).__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
