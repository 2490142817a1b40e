"""
Pixel-level localisation metrics

IoU compares a thresholded segmentation with the ground truth. Average
precision ranks all pixels by heatmap value and averages the precision at the
rank of every ground-truth pixel. Ties keep row-major pixel order.
"""

from typing import Dict, Iterable, Mapping

import numpy as np

from ..exceptions import InvalidInputError, MissingHeatmapError
from ..inference.heatmap import Heatmap, segment


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")


def iou(pred_mask: np.ndarray, gt_mask: np.ndarray) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    pred = np.asarray(pred_mask, dtype=bool)
    gt = np.asarray(gt_mask, dtype=bool)
    _check_shapes(pred, gt)
    union = np.count_nonzero(pred | gt)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & gt) / union


def pixel_ap(values: np.ndarray, gt_mask: np.ndarray) -> float:
    """
    Non-interpolated average precision of the pixel ranking.

    Args:
        values: (D, D) heatmap values
        gt_mask: (D, D) binary ground truth with at least one positive pixel

    Returns:
        Mean over positive pixels of precision at their rank
    """
    values = np.asarray(values, dtype=np.float64)
    gt = np.asarray(gt_mask, dtype=bool)
    _check_shapes(values, gt)
    positives = np.count_nonzero(gt)
    if positives == 0:
        raise InvalidInputError("average precision needs at least one ground-truth pixel")
    order = np.argsort(-values.ravel(), kind="stable")
    relevant = gt.ravel()[order]
    hits = np.cumsum(relevant)
    ranks = np.arange(1, relevant.size + 1)
    return float(np.sum(hits[relevant] / ranks[relevant]) / positives)


def iou_sweep(heatmaps: Mapping[str, Heatmap], gt_masks: Mapping[str, np.ndarray],
              thresholds: Iterable[float]) -> Dict[float, float]:
    """Mean IoU over images for each segmentation threshold."""
    missing = set(gt_masks) - set(heatmaps)
    if missing:
        raise MissingHeatmapError(missing)
    ids = sorted(gt_masks)
    if not ids:
        raise InvalidInputError("no images to sweep")
    return {
        float(a): float(np.mean([iou(segment(heatmaps[i], a), gt_masks[i]) for i in ids]))
        for a in thresholds
    }
