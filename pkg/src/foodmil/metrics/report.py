"""
Metric reports

A markdown summary for people, `metrics.txt` with flat `key: value` lines
and `metrics.json` for scripts.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from ..exceptions import ExportError
from .evaluation import MetricsReport
from .reference_results import ReferenceResult

logger = logging.getLogger(__name__)

COLUMNS = ("accuracy", "precision", "recall", "f1", "mean_iou", "mean_ap")
HEADERS = ("Accuracy", "Precision", "Recall", "F1-score", "IoU", "AP")


def _percent(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{100 * value:.1f}%"


def flatten(report: MetricsReport) -> Dict[str, Any]:
    flat: Dict[str, Any] = {f"confusion.{k}": v for k, v in report.confusion.to_dict().items()}
    for key in COLUMNS:
        flat[key] = getattr(report, key)
    flat["n_images_pixel_eval"] = report.n_images_pixel_eval
    flat["seg_threshold"] = report.seg_threshold
    for a, value in sorted(report.iou_sweep.items()):
        flat[f"iou_sweep.{a:g}"] = value
    return flat


def render_report(report: MetricsReport, title: str, reference: Optional[ReferenceResult] = None) -> str:
    """
    Format a report as markdown.

    Args:
        report: Evaluation result
        title: Usually the meta-class name
        reference: Published numbers to print underneath

    Returns:
        Markdown text
    """
    cm = report.confusion
    text = f"""
# Results for "{title}"

## Confusion matrix ({cm.total} test images)

|                 | Predicted positive | Predicted negative |
|-----------------|-------------------:|-------------------:|
| Actual positive | {cm.tp:>18} | {cm.fn:>18} |
| Actual negative | {cm.fp:>18} | {cm.tn:>18} |

## Classification and segmentation (a = {report.seg_threshold})

| {' | '.join(HEADERS)} |
|{'|'.join('---:' for _ in HEADERS)}|
| {' | '.join(_percent(getattr(report, key)) for key in COLUMNS)} |
"""
    if report.n_images_pixel_eval:
        text += f"\nPixel metrics averaged over {report.n_images_pixel_eval} ground-truth positive images.\n"
    else:
        text += "\nNo pixel evaluation.\n"

    if report.iou_sweep:
        thresholds = sorted(report.iou_sweep)
        labels = [f"{a:g}" for a in thresholds]
        text += f"""
## Mean IoU by threshold

| a | {' | '.join(labels)} |
|---|{'|'.join('---:' for _ in thresholds)}|
| IoU | {' | '.join(_percent(report.iou_sweep[a]) for a in thresholds)} |
"""

    if reference is not None:
        values = (reference.accuracy, reference.precision, reference.recall, reference.f1, reference.iou, reference.ap)
        text += f"""
## Reference ({reference.meta_class}, full FoodSeg103 recipe)

| {' | '.join(HEADERS)} |
|{'|'.join('---:' for _ in HEADERS)}|
| {' | '.join(_percent(v) for v in values)} |
"""
    return text


def write_report(report: MetricsReport, directory: os.PathLike, title: str = "",
                 reference: Optional[ReferenceResult] = None) -> Dict[str, Path]:
    """Write metrics.txt, metrics.json and report.md into a directory."""
    directory = Path(directory)
    paths = {
        "text": directory / "metrics.txt",
        "json": directory / "metrics.json",
        "markdown": directory / "report.md",
    }
    current = directory
    try:
        directory.mkdir(parents=True, exist_ok=True)
        current = paths["text"]
        with open(current, "w", encoding="utf-8") as handle:
            for key, value in flatten(report).items():
                handle.write(f"{key}: {'n/a' if value is None else value}\n")
        current = paths["json"]
        with open(current, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")
        current = paths["markdown"]
        with open(current, "w", encoding="utf-8") as handle:
            handle.write(render_report(report, title or "run", reference).lstrip("\n"))
    except OSError as exc:
        raise ExportError(current, exc) from exc
    logger.info("Wrote metrics to %s", directory)
    return paths
