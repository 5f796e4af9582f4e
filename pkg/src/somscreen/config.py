"""Flat ``key = value`` pipeline configuration.

Keys are namespaced (``train.sigma0 = 1.0``); unknown keys are errors so
typos never silently fall back to defaults.  ``#`` starts a comment.
"""

from dataclasses import dataclass, replace
from pathlib import Path

from .detector import DEFAULT_BINS, GATE_MODES, validate_bins
from .exceptions import ConfigError
from .som import TOPOLOGIES

_TOPOLOGY_ALIASES = {"hex": "hexagonal", "rect": "rectangular"}


@dataclass
class PipelineConfig:
    sigma: float = 1.0
    learning_rate: float = 1.0
    iterations: int | None = None  # None: 10 * n_samples
    topology: str = "hexagonal"
    init: str = "random_uniform"
    sigma_decay: str = "asymptotic"
    seed: int = 0
    segmentation_threshold: float | None = None  # None: Otsu per patch
    gate: str = "mean_plus_2std"
    bins: tuple = DEFAULT_BINS
    folds: int = 5

    def som_params(self) -> dict:
        """Constructor kwargs for SelfOrganizingMap."""
        return {
            "n_iter": self.iterations,
            "sigma": self.sigma,
            "learning_rate": self.learning_rate,
            "topology": self.topology,
            "init": self.init,
            "sigma_decay": self.sigma_decay,
            "random_state": self.seed,
        }


def _parse_float(value, key):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_int(value, key):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _parse_topology(value, key):
    value = _TOPOLOGY_ALIASES.get(value, value)
    if value not in TOPOLOGIES:
        raise ConfigError(f"{key}: expected one of {TOPOLOGIES}, got {value!r}")
    return value


def parse_bins(value):
    """Bins as ``lo:hi[:name]`` entries separated by commas."""
    bins = []
    for entry in value.split(","):
        parts = entry.strip().split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"bins: expected lo:hi[:name], got {entry!r}")
        lo = _parse_float(parts[0], "bins")
        hi = _parse_float(parts[1], "bins")
        name = parts[2] if len(parts) == 3 else f"{lo}-{hi}"
        bins.append((name, lo, hi))
    try:
        return validate_bins(bins)
    except ValueError as exc:
        raise ConfigError(f"bins: {exc}") from None


def _apply(config, key, value):
    if key == "train.sigma0":
        return replace(config, sigma=_parse_float(value, key))
    if key == "train.alpha0":
        return replace(config, learning_rate=_parse_float(value, key))
    if key == "train.iterations":
        return replace(config, iterations=_parse_int(value, key))
    if key == "train.topology":
        return replace(config, topology=_parse_topology(value, key))
    if key == "train.init":
        if value not in ("random_uniform", "pca_plane"):
            raise ConfigError(f"{key}: unknown init {value!r}")
        return replace(config, init=value)
    if key == "train.sigma_decay":
        if value not in ("asymptotic", "constant"):
            raise ConfigError(f"{key}: unknown sigma_decay {value!r}")
        return replace(config, sigma_decay=value)
    if key == "train.seed":
        return replace(config, seed=_parse_int(value, key))
    if key == "segmentation.threshold":
        if value == "otsu":
            return replace(config, segmentation_threshold=None)
        return replace(config, segmentation_threshold=_parse_float(value, key))
    if key == "gate.mode":
        if value not in GATE_MODES:
            raise ConfigError(f"{key}: expected one of {GATE_MODES}, got {value!r}")
        return replace(config, gate=value)
    if key == "cv.folds":
        folds = _parse_int(value, key)
        if folds < 2:
            raise ConfigError(f"{key}: folds must be >= 2, got {folds}")
        return replace(config, folds=folds)
    if key == "bins":
        return replace(config, bins=parse_bins(value))
    raise ConfigError(f"unknown key {key!r}")


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    config = base if base is not None else PipelineConfig()
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}")
        try:
            config = _apply(config, key, value)
        except ConfigError as exc:
            raise ConfigError(f"line {number}: {exc}") from None
    return config


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)
