"""
Image preprocessing

Resizing to the common DxD frame, image-level labels from masks, and the
positive-pixel filter. The pixel threshold is always applied after resizing.
"""

import logging
from dataclasses import replace
from typing import Iterable, List, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from ..config import REFERENCE_PIXEL_THRESHOLD, REFERENCE_SIZE, DatasetConfig
from ..exceptions import InvalidInputError
from .meta_classes import MetaClassMap
from .records import ImageRecord, Label

logger = logging.getLogger(__name__)


def scaled_pixel_threshold(size: int) -> int:
    """The 20,000-pixel threshold rescaled to a DxD image with the same area fraction."""
    return int(round(REFERENCE_PIXEL_THRESHOLD * size * size / float(REFERENCE_SIZE ** 2)))


def resize_image(image: np.ndarray, size: int) -> np.ndarray:
    """
    Bilinearly resize an HxWx3 image to size x size.

    Uses half-pixel centres (align_corners=False) without antialiasing, so every
    output value is a convex combination of input values and the range is kept.

    Args:
        image: HxWx3 array, uint8 or floating point
        size: Target side length D

    Returns:
        DxDx3 array of the input dtype
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] < 1 or image.shape[1] < 1:
        raise InvalidInputError(f"expected a non-empty HxWx3 image, got shape {image.shape}")
    if size < 1:
        raise InvalidInputError("target size must be >= 1")
    if image.shape[0] == size and image.shape[1] == size:
        return image.copy()
    tensor = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float64)).permute(2, 0, 1).unsqueeze(0)
    resized = F.interpolate(tensor, size=(size, size), mode="bilinear", align_corners=False)
    out = resized.squeeze(0).permute(1, 2, 0).numpy()
    if np.issubdtype(image.dtype, np.integer):
        info = np.iinfo(image.dtype)
        out = np.clip(np.rint(out), info.min, info.max)
    return out.astype(image.dtype)


def _nearest_indices(source: int, size: int) -> np.ndarray:
    idx = np.floor((np.arange(size) + 0.5) * source / float(size)).astype(np.int64)
    return np.clip(idx, 0, source - 1)


def resize_mask(mask: np.ndarray, size: int) -> np.ndarray:
    """
    Nearest-neighbour resize of an HxW class-id mask; never invents class ids.

    Args:
        mask: HxW integer array
        size: Target side length D

    Returns:
        DxD array of the input dtype
    """
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
        raise InvalidInputError(f"expected a non-empty HxW mask, got shape {mask.shape}")
    if not np.issubdtype(mask.dtype, np.integer):
        raise InvalidInputError("mask must hold integer class ids")
    if mask.min() < 0:
        raise InvalidInputError("mask contains negative class ids")
    if size < 1:
        raise InvalidInputError("target size must be >= 1")
    rows = _nearest_indices(mask.shape[0], size)
    cols = _nearest_indices(mask.shape[1], size)
    return mask[np.ix_(rows, cols)].copy()


def binarize_label(mask: np.ndarray, meta_class: MetaClassMap, pixel_threshold: int) -> Tuple[Label, int]:
    """
    Image-level label from a resized mask.

    Args:
        mask: DxD class-id mask
        meta_class: Classes that count as positive
        pixel_threshold: Minimum member pixels for a positive label

    Returns:
        (label, positive_pixel_count); exactly pixel_threshold pixels is positive
    """
    count = int(np.count_nonzero(np.isin(mask, list(meta_class.member_class_ids))))
    label = Label.POSITIVE if count >= pixel_threshold else Label.NEGATIVE
    return label, count


def is_weak_positive(record: ImageRecord, pixel_threshold: int) -> bool:
    """Some member pixels, but fewer than the threshold."""
    return 0 < record.positive_pixel_count < pixel_threshold


def filter_records(records: Iterable[ImageRecord], config: DatasetConfig) -> List[ImageRecord]:
    """
    Drop weak positives; keep pure negatives and positives at or above the threshold.

    Labels are re-derived from the counts, so the result always satisfies
    label == positive <=> count >= threshold. Idempotent.
    """
    kept = []
    dropped = 0
    for record in records:
        if is_weak_positive(record, config.pixel_threshold):
            dropped += 1
            continue
        expected = Label.POSITIVE if record.positive_pixel_count >= config.pixel_threshold else Label.NEGATIVE
        if record.label != expected:
            record = replace(record, label=expected)
        kept.append(record)
    if dropped:
        logger.info("Discarded %d image(s) with fewer than %d positive pixels", dropped, config.pixel_threshold)
    return kept


def preprocess(image: np.ndarray, mask: np.ndarray, meta_class: MetaClassMap,
               config: DatasetConfig) -> Tuple[np.ndarray, np.ndarray, Label, int]:
    """Resize an image/mask pair and derive its label; the count is taken after resizing."""
    if image.shape[:2] != mask.shape:
        raise InvalidInputError(f"image {image.shape[:2]} and mask {mask.shape} sizes differ")
    pixels = resize_image(image, config.target_size)
    resized_mask = resize_mask(mask, config.target_size)
    label, count = binarize_label(resized_mask, meta_class, config.pixel_threshold)
    return pixels, resized_mask, label, count
