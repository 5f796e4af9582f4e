"""Synthetic 50x50 phase patches for exercising the screening pipeline.

Inliers are single Gaussian optical-density bumps near the patch center.
The four outlier kinds mimic the contamination sources seen in practice:
merged cell pairs (duplet), strong background noise (noise), badly focused
cells (defocus), and bright interference at a channel border (border_cut).
The physics is deliberately simple; the point is a dataset whose outliers
are separable from inliers in feature space, not optical realism.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .validation import PATCH_SIZE

KINDS = ("inlier", "duplet", "noise", "defocus", "border_cut")

OUTLIER_KINDS = KINDS[1:]


@dataclass(frozen=True)
class PhantomSpec:
    """Recipe for one synthetic patch; identical specs give identical patches."""

    kind: str
    seed: int
    amplitude_range: tuple = (1.8, 2.6)
    radius_range: tuple = (5.0, 7.0)

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        lo_a, hi_a = self.amplitude_range
        lo_r, hi_r = self.radius_range
        if not (0 < lo_a <= hi_a):
            raise ValueError(f"bad amplitude_range {self.amplitude_range!r}")
        if not (2.0 < lo_r <= hi_r < 20.0):
            raise ValueError(
                f"radius_range must lie within (2, 20), got {self.radius_range!r}"
            )
        if int(self.seed) < 0:
            raise ValueError("seed must be a non-negative integer")


def _bump(amplitude, radius, center_x, center_y):
    yy, xx = np.mgrid[0:PATCH_SIZE, 0:PATCH_SIZE].astype(np.float64)
    sq = (xx - center_x) ** 2 + (yy - center_y) ** 2
    return amplitude * np.exp(-sq / (2.0 * radius * radius))


def generate(spec: PhantomSpec) -> np.ndarray:
    """Render one patch from a spec; deterministic per (kind, seed, ranges)."""
    spec.validate()
    rng = np.random.default_rng(int(spec.seed))
    amplitude = rng.uniform(*spec.amplitude_range)
    radius = rng.uniform(*spec.radius_range)
    center = (PATCH_SIZE - 1) / 2.0
    cx = center + rng.uniform(-3.0, 3.0)
    cy = center + rng.uniform(-3.0, 3.0)
    patch = _bump(amplitude, radius, cx, cy)
    noise_std = 0.01 * amplitude

    if spec.kind == "duplet":
        separation = rng.uniform(1.0, 1.8) * radius
        angle = rng.uniform(0.0, 2.0 * np.pi)
        partner_radius = rng.uniform(1.05, 1.25) * radius
        # occluding (max) combination keeps the value histogram comparable to
        # a single cell, so threshold selection stays stable and the merged
        # footprint drives the feature shift
        patch = np.maximum(
            patch,
            _bump(
                amplitude,
                partner_radius,
                cx + separation * np.cos(angle),
                cy + separation * np.sin(angle),
            ),
        )
    elif spec.kind == "noise":
        noise_std = rng.uniform(0.25, 0.40) * amplitude
    elif spec.kind == "defocus":
        blur = rng.uniform(1.0, 1.5) * radius
        patch = gaussian_filter(patch, blur)
    elif spec.kind == "border_cut":
        edge = int(rng.integers(0, 4))
        width = int(rng.integers(10, 16))
        peak = rng.uniform(1.5, 2.5) * amplitude
        ramp = peak * (1.0 - np.arange(width) / width)
        if edge == 0:
            patch[:, :width] += ramp
        elif edge == 1:
            patch[:, -width:] += ramp[::-1]
        elif edge == 2:
            patch[:width, :] += ramp[:, None]
        else:
            patch[-width:, :] += ramp[::-1, None]

    return patch + rng.normal(0.0, noise_std, size=patch.shape)


def derived_seed(master_seed: int, index: int) -> int:
    """Stable per-sample seed from the master seed and sample index."""
    sequence = np.random.SeedSequence(entropy=(int(master_seed), int(index)))
    return int(sequence.generate_state(1, np.uint64)[0])


def generate_samples(n_inliers: int, n_outliers_per_kind: int, seed: int,
                     amplitude_range=(1.8, 2.6), radius_range=(5.0, 7.0)):
    """In-memory dataset: list of (id, label, patch), inliers first.

    Sample seeds derive from the master seed and the running index, so any
    prefix of the dataset is stable under count changes further down.
    """
    if n_inliers < 0 or n_outliers_per_kind < 0:
        raise ValueError("sample counts must be non-negative")
    samples = []
    index = 0
    for kind, count in [("inlier", n_inliers)] + [
        (kind, n_outliers_per_kind) for kind in OUTLIER_KINDS
    ]:
        for local in range(count):
            spec = PhantomSpec(
                kind=kind,
                seed=derived_seed(seed, index),
                amplitude_range=amplitude_range,
                radius_range=radius_range,
            )
            samples.append((f"{kind}_{local:04d}", kind, generate(spec)))
            index += 1
    return samples


def generate_dataset(out_dir, n_inliers: int, n_outliers_per_kind: int, seed: int):
    """Write patch files plus a manifest.csv under ``out_dir``.

    Returns the manifest rows as (path, id, label) with paths relative to
    ``out_dir``.  Regenerating with the same arguments is byte-identical.
    """
    from . import io as sio

    out_dir = sio.ensure_dir(out_dir)
    rows = []
    for sample_id, label, patch in generate_samples(n_inliers, n_outliers_per_kind, seed):
        filename = f"{sample_id}.txt"
        sio.write_patch(out_dir / filename, patch)
        rows.append((filename, sample_id, label))
    sio.write_manifest(out_dir / "manifest.csv", rows)
    return rows
