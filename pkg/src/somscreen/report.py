"""Report artifacts: QE histograms, distance-map and hit-map grids, and the
inlier/outlier separation summary.

Everything written here is deterministic for a given model and score set;
no timestamps or environment details end up in the files.
"""

import math
from pathlib import Path

import numpy as np

from .detector import DEFAULT_BINS, bin_errors, hit_map, separation_stat
from .io import ensure_dir, fmt

# log-spaced QE partition used for the histogram file and its SVG rendering;
# under/overflow rows make the partition exhaustive so counts always sum to
# the number of records
LOG_LO = 1e-3
LOG_HI = 1e2
N_LOG_BINS = 25


def log_edges() -> np.ndarray:
    return np.logspace(math.log10(LOG_LO), math.log10(LOG_HI), N_LOG_BINS + 1)


def qe_histogram_rows(qes, bins=DEFAULT_BINS):
    """Histogram rows (name, lo, hi, count): log partition then named bins."""
    qes = np.asarray(qes, dtype=np.float64)
    edges = log_edges()
    rows = [("underflow", 0.0, LOG_LO, int((qes < LOG_LO).sum()))]
    for k in range(N_LOG_BINS):
        count = int(((qes >= edges[k]) & (qes < edges[k + 1])).sum())
        rows.append((f"log_{k:02d}", float(edges[k]), float(edges[k + 1]), count))
    rows.append(("overflow", LOG_HI, math.inf, int((qes >= LOG_HI).sum())))
    for name, lo, hi in bins:
        count = int(((qes >= lo) & (qes < hi)).sum())
        rows.append((name, lo, hi, count))
    other = sum(1 for q in qes if not any(lo <= q < hi for _, lo, hi in bins))
    rows.append(("other", math.nan, math.nan, int(other)))
    return rows


def write_histogram_csv(path, rows) -> None:
    lines = ["name,lo,hi,count"]
    lines += [f"{name},{fmt(lo)},{fmt(hi)},{count}" for name, lo, hi, count in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def histogram_svg(rows) -> str:
    """Minimal bar-chart SVG of the log-partition rows (plus under/overflow)."""
    bars = [r for r in rows if r[0] in ("underflow", "overflow") or r[0].startswith("log_")]
    width, height, margin = 660, 300, 40
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin
    peak = max((count for _, _, _, count in bars), default=0)
    bar_w = plot_w / max(len(bars), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{margin}" y="20" font-family="monospace" font-size="12">'
        f"quantization error histogram (log-spaced bins, max count {peak})</text>",
    ]
    for i, (name, _, _, count) in enumerate(bars):
        h = 0.0 if peak == 0 else plot_h * count / peak
        x = margin + i * bar_w
        y = height - margin - h
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w * 0.9:.2f}" '
            f'height="{h:.2f}" fill="#4878a8"><title>{name}: {count}</title></rect>'
        )
    parts.append(
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_grid_csv(path, grid, formatter=fmt) -> None:
    lines = [",".join(formatter(v) for v in row) for row in np.asarray(grid)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def safe_name(group: str) -> str:
    cleaned = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in group)
    return cleaned or "unlabeled"


def write_report(out_dir, som, records, bins=DEFAULT_BINS) -> list:
    """Emit all report files for a fitted map; returns the written paths."""
    out_dir = ensure_dir(out_dir)
    written = []

    qes = [r.qe for r in records]
    rows = qe_histogram_rows(qes, bins)
    histogram_path = out_dir / "qe_histogram.csv"
    write_histogram_csv(histogram_path, rows)
    written.append(histogram_path)
    svg_path = out_dir / "qe_histogram.svg"
    svg_path.write_text(histogram_svg(rows), encoding="utf-8", newline="\n")
    written.append(svg_path)

    dmap = som.distance_map()
    dmap_path = out_dir / "distance_map.csv"
    write_grid_csv(dmap_path, dmap)
    written.append(dmap_path)

    for group, counts in hit_map(records, som.rows_, som.cols_, "label").items():
        path = out_dir / f"hitmap_{safe_name(group)}.csv"
        write_grid_csv(path, counts, formatter=str)
        written.append(path)

    by_verdict = hit_map(records, som.rows_, som.cols_, "verdict")
    lines = ["metric,value"]
    if "inlier" in by_verdict and "outlier" in by_verdict:
        value = separation_stat(dmap, by_verdict["inlier"], by_verdict["outlier"])
        lines.append(f"separation_stat,{fmt(value)}")
    else:
        lines.append("separation_stat,nan")
    separation_path = out_dir / "separation.csv"
    separation_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    written.append(separation_path)
    return written
