"""
Metrics: classification scores, IoU and pixel AP, test-set reports
"""

from .classification import ClassificationScores, ConfusionMatrix, classification_metrics, confusion_from_labels
from .evaluation import MetricsReport, evaluate_testset, ground_truth_mask
from .localization import iou, iou_sweep, pixel_ap
from .reference_results import REFERENCE_RESULTS, REFERENCE_TRAIN_COUNTS, ReferenceResult
from .report import flatten, render_report, write_report

__all__ = [
    "ClassificationScores",
    "ConfusionMatrix",
    "MetricsReport",
    "REFERENCE_RESULTS",
    "REFERENCE_TRAIN_COUNTS",
    "ReferenceResult",
    "classification_metrics",
    "confusion_from_labels",
    "evaluate_testset",
    "flatten",
    "ground_truth_mask",
    "iou",
    "iou_sweep",
    "pixel_ap",
    "render_report",
    "write_report",
]
