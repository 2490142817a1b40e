"""
Heatmap and segmentation files

Per image: `<id>.heat.png` (16-bit grayscale, value round(65535 * v)),
`<id>.seg.png` (1-bit mask at threshold a) and `<id>.meta.json`. Images with a
ground-truth mask also get `<id>.panel.png` for a side-by-side look.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from PIL import Image, ImageOps

from ..exceptions import ExportError, InvalidInputError
from ..patchbag.grid import GridSpec, count_mismatch, count_patches
from .heatmap import Heatmap
from .predictor import Prediction

logger = logging.getLogger(__name__)

HEAT_SCALE = 65535


def heatmap_to_uint16(values: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(values, 0.0, 1.0) * HEAT_SCALE).astype(np.uint16)


def _grid_meta(spec: GridSpec) -> Dict[str, Any]:
    return {
        "D": spec.D,
        "d": spec.d,
        "overlap": spec.overlap,
        "patches": spec.positions_per_axis() ** 2,
        "count_patches": count_patches(spec),
        "count_mismatch": count_mismatch(spec),
    }


def export_outputs(prediction: Prediction, heatmap: Heatmap, out_dir: os.PathLike,
                   spec: Optional[GridSpec] = None) -> Dict[str, Path]:
    """
    Write heatmap, segmentation and metadata for one image.

    Args:
        prediction: Classification result of the image
        heatmap: Its heatmap; the segmentation uses heatmap.seg_threshold
        out_dir: Output directory, created when missing
        spec: Dense grid the heatmap came from, recorded in the metadata

    Returns:
        {"heatmap": path, "segmentation": path, "meta": path}
    """
    out_dir = Path(out_dir)
    paths = {
        "heatmap": out_dir / f"{prediction.image_id}.heat.png",
        "segmentation": out_dir / f"{prediction.image_id}.seg.png",
        "meta": out_dir / f"{prediction.image_id}.meta.json",
    }
    meta = {
        "image_id": prediction.image_id,
        "probability": prediction.probability,
        "label": str(prediction.label),
        "classification_threshold": prediction.threshold,
        "seg_threshold": heatmap.seg_threshold,
        "heat_scale": HEAT_SCALE,
        "grid": None if spec is None else _grid_meta(spec),
    }
    current = paths["heatmap"]
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        Image.fromarray(heatmap_to_uint16(heatmap.values)).save(current, format="PNG")
        current = paths["segmentation"]
        mask = Image.fromarray(heatmap.segmentation.astype(np.uint8) * 255)
        mask.convert("1", dither=0).save(current, format="PNG")
        current = paths["meta"]
        with open(current, "w", encoding="utf-8") as handle:
            json.dump(meta, handle, indent=2, sort_keys=True)
            handle.write("\n")
    except OSError as exc:
        raise ExportError(current, exc) from exc
    logger.debug("Exported outputs for %s to %s", prediction.image_id, out_dir)
    return paths


def export_panel(pixels: np.ndarray, gt_mask: np.ndarray, heatmap: Heatmap, out_path: os.PathLike) -> Path:
    """
    Write the image, its ground truth, heatmap and segmentation side by side.

    Args:
        pixels: DxDx3 uint8 image the heatmap was computed on
        gt_mask: DxD boolean meta-class mask
        heatmap: Heatmap of the image; the last panel uses heatmap.seg_threshold
        out_path: PNG file to write

    Returns:
        out_path as a Path
    """
    size = heatmap.size
    if pixels.shape[:2] != (size, size) or gt_mask.shape != (size, size):
        raise InvalidInputError(
            f"panel inputs must be {size}x{size}, got pixels {pixels.shape[:2]} and mask {gt_mask.shape}"
        )
    heat = Image.fromarray(np.rint(np.clip(heatmap.values, 0.0, 1.0) * 255).astype(np.uint8))
    panels = [
        Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).convert("RGB"),
        Image.fromarray(gt_mask.astype(np.uint8) * 255).convert("RGB"),
        ImageOps.colorize(heat, black="black", white="yellow", mid="red"),
        Image.fromarray(heatmap.segmentation.astype(np.uint8) * 255).convert("RGB"),
    ]
    canvas = Image.new("RGB", (size * len(panels), size))
    for index, panel in enumerate(panels):
        canvas.paste(panel, (index * size, 0))
    out_path = Path(out_path)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        canvas.save(out_path, format="PNG")
    except OSError as exc:
        raise ExportError(out_path, exc) from exc
    return out_path


def load_heatmap(path: os.PathLike) -> np.ndarray:
    """Read a `.heat.png` back as float values in [0, 1]."""
    with Image.open(path) as image:
        raw = np.asarray(image, dtype=np.float64)
    return raw / HEAT_SCALE


def load_segmentation(path: os.PathLike) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("L")) > 0
