"""
Synthetic plates

A desk-scale stand-in for FoodSeg103: textured table backgrounds with zero to
three coloured, textured shapes. One shape class is the target meta-class;
the others are distractors. Masks are exact, so localisation can be scored.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import InvalidInputError
from .meta_classes import MetaClassMap
from .preprocessing import binarize_label, scaled_pixel_threshold
from .records import ImageRecord

logger = logging.getLogger(__name__)

TARGET_CLASS_ID = 1
DISTRACTOR_CLASS_IDS = (2, 3, 4)
TARGET_META_CLASS = MetaClassMap(name="Target", member_class_ids=frozenset({TARGET_CLASS_ID}),
                                 member_names={"pastry": TARGET_CLASS_ID})

# Base RGB colour per class id; the target is the only warm orange.
CLASS_COLORS = {
    TARGET_CLASS_ID: (222, 140, 48),
    2: (70, 150, 70),
    3: (60, 90, 185),
    4: (150, 70, 160),
}
SHAPE_KINDS = ("circle", "rectangle", "ellipse")
MAX_SHAPES = 3


def _shape_region(rng: np.random.Generator, size: int, kind: str) -> np.ndarray:
    """Boolean region of a shape lying fully inside the image."""
    rows, cols = np.ogrid[:size, :size]
    rows = rows + 0.5
    cols = cols + 0.5
    if kind == "circle":
        radius = rng.uniform(0.2, 0.3) * size
        cy, cx = rng.uniform(radius, size - radius, 2)
        return (rows - cy) ** 2 + (cols - cx) ** 2 <= radius ** 2
    if kind == "rectangle":
        h, w = (rng.uniform(0.3, 0.5, 2) * size).astype(int)
        top = rng.integers(0, size - h + 1)
        left = rng.integers(0, size - w + 1)
        region = np.zeros((size, size), dtype=bool)
        region[top:top + h, left:left + w] = True
        return region
    ry, rx = rng.uniform(0.2, 0.32, 2) * size
    cy = rng.uniform(ry, size - ry)
    cx = rng.uniform(rx, size - rx)
    return ((rows - cy) / ry) ** 2 + ((cols - cx) / rx) ** 2 <= 1.0


def _background(rng: np.random.Generator, size: int) -> np.ndarray:
    gray = rng.uniform(150, 210)
    tint = rng.uniform(-12, 12, 3)
    base = np.full((size, size, 3), gray) + tint
    rows, cols = np.mgrid[:size, :size] / float(size)
    gradient = rng.uniform(-20, 20) * rows + rng.uniform(-20, 20) * cols
    grain = rng.normal(0.0, 6.0, (size, size, 3))
    return base + gradient[..., None] + grain


def _texture(rng: np.random.Generator, size: int, class_id: int) -> np.ndarray:
    rows, cols = np.mgrid[:size, :size].astype(np.float64)
    if class_id == TARGET_CLASS_ID:
        # Crust-like stripes.
        angle = rng.uniform(0, np.pi)
        period = rng.uniform(5.0, 9.0)
        phase = (rows * np.sin(angle) + cols * np.cos(angle)) * 2 * np.pi / period
        shade = 1.0 + 0.12 * np.sin(phase)
    else:
        shade = 1.0 + rng.normal(0.0, 0.06, (size, size))
    color = np.asarray(CLASS_COLORS[class_id], dtype=np.float64)
    return shade[..., None] * color[None, None, :] + rng.normal(0.0, 5.0, (size, size, 3))


def render_plate(rng: np.random.Generator, size: int, with_target: bool) -> Tuple[np.ndarray, np.ndarray]:
    """
    Render one image and its exact class-id mask.

    Distractors are drawn first and the target last, so the target is never
    occluded and its full area counts toward the label.
    """
    pixels = _background(rng, size)
    mask = np.zeros((size, size), dtype=np.int64)
    n_distractors = int(rng.integers(0, MAX_SHAPES if with_target else MAX_SHAPES + 1))
    classes = [int(rng.choice(DISTRACTOR_CLASS_IDS)) for _ in range(n_distractors)]
    if with_target:
        classes.append(TARGET_CLASS_ID)
    for class_id in classes:
        region = _shape_region(rng, size, SHAPE_KINDS[int(rng.integers(len(SHAPE_KINDS)))])
        texture = _texture(rng, size, class_id)
        pixels[region] = texture[region]
        mask[region] = class_id
    return np.clip(np.rint(pixels), 0, 255).astype(np.uint8), mask


def generate_synthetic(seed: int, n_images: int, size: int,
                       pixel_threshold: Optional[int] = None,
                       test_fraction: float = 0.3) -> List[ImageRecord]:
    """
    Generate a deterministic synthetic dataset.

    Args:
        seed: Seed for every random choice; equal seeds give identical datasets
        n_images: Number of images, at least 2
        size: Image side length D
        pixel_threshold: Positive-pixel threshold; the reference threshold
            scaled to DxD when omitted
        test_fraction: Share of images assigned to the test split

    Returns:
        Records with in-memory pixels and masks, half of them containing the target
    """
    if n_images < 2:
        raise InvalidInputError("n_images must be >= 2")
    if size < 32:
        raise InvalidInputError("size must be >= 32")
    if not 0.0 < test_fraction < 1.0:
        raise InvalidInputError("test_fraction must lie in (0, 1)")
    threshold = scaled_pixel_threshold(size) if pixel_threshold is None else pixel_threshold
    rng = np.random.default_rng(seed)

    with_target = np.zeros(n_images, dtype=bool)
    with_target[: n_images // 2] = True
    rng.shuffle(with_target)
    n_test = min(max(int(round(n_images * test_fraction)), 1), n_images - 1)
    is_test = np.zeros(n_images, dtype=bool)
    is_test[rng.permutation(n_images)[:n_test]] = True

    records = []
    for index in range(n_images):
        pixels, mask = render_plate(rng, size, bool(with_target[index]))
        label, count = binarize_label(mask, TARGET_META_CLASS, threshold)
        records.append(ImageRecord(
            image_id=f"synth-{seed}-{index:05d}",
            label=label,
            positive_pixel_count=count,
            split="test" if is_test[index] else "train",
            pixels=pixels,
            mask=mask,
        ))
    logger.info("Generated %d synthetic %dx%d images (seed %d, threshold %d px)",
                n_images, size, size, seed, threshold)
    return records
