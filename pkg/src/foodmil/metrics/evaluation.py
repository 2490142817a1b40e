"""
Test-set evaluation

Classification is scored on every test image. Localisation is scored on the
ground-truth positive images only, whatever the classifier decided for them,
and IoU and AP are averaged per image.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np

from ..dataset.meta_classes import MetaClassMap
from ..dataset.records import ImageRecord
from ..exceptions import DatasetError, InvalidInputError, MissingHeatmapError, MissingPredictionError
from ..inference.heatmap import Heatmap, segment
from ..inference.predictor import Prediction
from .classification import ConfusionMatrix, classification_metrics, confusion_from_labels
from .localization import iou, iou_sweep, pixel_ap

logger = logging.getLogger(__name__)

SWEEP_THRESHOLDS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass
class MetricsReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    mean_iou: Optional[float] = None
    mean_ap: Optional[float] = None
    n_images_pixel_eval: int = 0
    seg_threshold: float = 0.3
    per_image: Dict[str, Dict[str, float]] = field(default_factory=dict)
    iou_sweep: Dict[float, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "confusion": self.confusion.to_dict(),
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "mean_iou": self.mean_iou,
            "mean_ap": self.mean_ap,
            "n_images_pixel_eval": self.n_images_pixel_eval,
            "seg_threshold": self.seg_threshold,
            "per_image": self.per_image,
            "iou_sweep": {f"{a:g}": value for a, value in sorted(self.iou_sweep.items())},
        }


def ground_truth_mask(record: ImageRecord, meta_class: MetaClassMap) -> np.ndarray:
    """Binary mask of the pixels that belong to the meta-class."""
    mask = record.load_mask()
    if mask is None:
        raise DatasetError(f"{record.image_id}: no ground-truth mask for pixel evaluation")
    return np.isin(mask, sorted(meta_class.member_class_ids))


def evaluate_testset(predictions: Mapping[str, Prediction], heatmaps: Mapping[str, Heatmap],
                     records: Sequence[ImageRecord], a: float, meta_class: Optional[MetaClassMap] = None,
                     skip_pixel: bool = False,
                     sweep_thresholds: Sequence[float] = SWEEP_THRESHOLDS) -> MetricsReport:
    """
    Score a test set.

    Args:
        predictions: Prediction per image id, one for every record
        heatmaps: Heatmap per image id, required for every ground-truth positive
        records: Test records
        a: Segmentation threshold
        meta_class: Classes whose pixels form the ground-truth mask
        skip_pixel: Only compute classification metrics
        sweep_thresholds: Thresholds for the mean IoU sweep; empty skips it

    Returns:
        The report; mean IoU and AP are None when no pixel evaluation ran
    """
    if not records:
        raise InvalidInputError("no test records to evaluate")
    ordered = sorted(records, key=lambda r: r.image_id)
    unpredicted = [r.image_id for r in ordered if r.image_id not in predictions]
    if unpredicted:
        raise MissingPredictionError(unpredicted)

    cm = confusion_from_labels([int(r.label) for r in ordered],
                               [int(predictions[r.image_id].label) for r in ordered])
    scores = classification_metrics(cm)
    report = MetricsReport(cm, *scores, seg_threshold=a)
    if skip_pixel:
        return report
    if meta_class is None:
        raise InvalidInputError("pixel evaluation needs the meta-class of the ground-truth masks")

    positives = [r for r in ordered if r.is_positive]
    missing = [r.image_id for r in positives if r.image_id not in heatmaps]
    if missing:
        raise MissingHeatmapError(missing)
    gt_masks = {}
    for record in positives:
        heatmap = heatmaps[record.image_id]
        gt = gt_masks[record.image_id] = ground_truth_mask(record, meta_class)
        report.per_image[record.image_id] = {
            "iou": iou(segment(heatmap, a), gt),
            "ap": pixel_ap(heatmap.values, gt),
        }
    if positives:
        report.mean_iou = float(np.mean([v["iou"] for v in report.per_image.values()]))
        report.mean_ap = float(np.mean([v["ap"] for v in report.per_image.values()]))
        if sweep_thresholds:
            report.iou_sweep = iou_sweep(heatmaps, gt_masks, sweep_thresholds)
    report.n_images_pixel_eval = len(positives)
    logger.info("Evaluated %d test images, %d with pixel metrics", len(ordered), len(positives))
    return report
