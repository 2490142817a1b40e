"""
Attention heatmaps

Every patch spreads its attention weight over its dxd footprint. The field is
the per-pixel mean of the weights covering it, rescaled so the maximum is 1.
Averaging instead of summing keeps border pixels, which fewer patches cover,
on the same scale as the interior.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions import InvalidInputError


@dataclass
class Heatmap:
    values: np.ndarray    # (D, D) float64 in [0, 1]
    coverage: np.ndarray  # (D, D) int64 patch counts
    seg_threshold: float = 0.3
    segmentation: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.values.shape != self.coverage.shape:
            raise InvalidInputError(f"values {self.values.shape} and coverage {self.coverage.shape} differ in shape")
        if self.segmentation is None:
            self.segmentation = segment(self, self.seg_threshold)

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def with_threshold(self, a: float) -> "Heatmap":
        return Heatmap(self.values, self.coverage, seg_threshold=a)


def accumulate_heatmap(weights: np.ndarray, origins: np.ndarray, D: int, d: int) -> "Heatmap":
    """
    Aggregate patch attention weights in pixel coordinates.

    Args:
        weights: (K,) attention weights of one bag
        origins: (K, 2) patch origins as (row, col)
        D: Image side length
        d: Patch side length

    Returns:
        Heatmap with values normalised to [0, 1]; uncovered pixels are 0
    """
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    origins = np.asarray(origins, dtype=np.int64).reshape(-1, 2)
    if len(weights) == 0:
        raise InvalidInputError("cannot build a heatmap from an empty bag")
    if len(weights) != len(origins):
        raise InvalidInputError(f"{len(weights)} weights for {len(origins)} patch origins")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise InvalidInputError("attention weights must be finite and non-negative")
    if origins.min() < 0 or origins.max() > D - d:
        raise InvalidInputError(f"patch origins must lie in [0, {D - d}]")

    total = np.zeros((D, D), dtype=np.float64)
    coverage = np.zeros((D, D), dtype=np.int64)
    for weight, (row, col) in zip(weights, origins):
        total[row:row + d, col:col + d] += weight
        coverage[row:row + d, col:col + d] += 1

    values = np.zeros((D, D), dtype=np.float64)
    covered = coverage > 0
    values[covered] = total[covered] / coverage[covered]
    peak = values.max()
    if peak > 0:
        values /= peak
    return Heatmap(values=values, coverage=coverage)


def segment(heatmap: Heatmap, a: float) -> np.ndarray:
    """Binary mask of covered pixels whose heatmap value is at least a."""
    if not 0.0 <= a <= 1.0:
        raise InvalidInputError(f"segmentation threshold must lie in [0, 1], got {a}")
    return (heatmap.values >= a) & (heatmap.coverage > 0)
