"""
Inference: predictions, attention heatmaps and their files
"""

from .export import HEAT_SCALE, export_outputs, export_panel, heatmap_to_uint16, load_heatmap, load_segmentation
from .heatmap import Heatmap, accumulate_heatmap, segment
from .predictor import Prediction, Predictor, heatmap_from_output, predict

__all__ = [
    "HEAT_SCALE",
    "Heatmap",
    "Prediction",
    "Predictor",
    "accumulate_heatmap",
    "export_outputs",
    "export_panel",
    "heatmap_from_output",
    "heatmap_to_uint16",
    "load_heatmap",
    "load_segmentation",
    "predict",
    "segment",
]
