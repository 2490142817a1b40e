"""
Bags of patches

A bag is the multiple-instance representation of one image: K patches with
the pixel origins they were cropped from. Training draws random bags from the
grid at overlap t; inference uses the full dense grid at overlap t'.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..dataset.records import ImageRecord
from ..exceptions import InvalidInputError
from .grid import GridSpec, grid_origins


@dataclass
class PatchBag:
    patches: np.ndarray  # (K, d, d, 3)
    origins: np.ndarray  # (K, 2) as (row, col)
    source_image_id: str

    def __post_init__(self):
        if len(self.patches) < 1:
            raise InvalidInputError("a bag needs at least one patch")
        if len(self.patches) != len(self.origins):
            raise InvalidInputError(
                f"{len(self.patches)} patches but {len(self.origins)} origins in bag {self.source_image_id}"
            )

    def __len__(self) -> int:
        return len(self.patches)

    @property
    def patch_size(self) -> int:
        return int(self.patches.shape[1])


def crop_patches(pixels: np.ndarray, origins: np.ndarray, d: int) -> np.ndarray:
    """Crop dxd patches at the given origins; every patch must lie inside the image."""
    size = pixels.shape[0]
    if origins.size and (origins.min() < 0 or origins.max() > size - d):
        raise InvalidInputError(f"patch origins must lie in [0, {size - d}]")
    patches = np.empty((len(origins), d, d, pixels.shape[2]), dtype=pixels.dtype)
    for k, (row, col) in enumerate(origins):
        patches[k] = pixels[row:row + d, col:col + d]
    return patches


def _check_image(pixels: np.ndarray, spec: GridSpec, image_id: str) -> None:
    if pixels.shape[0] != spec.D or pixels.shape[1] != spec.D:
        raise InvalidInputError(f"{image_id}: image is {pixels.shape[:2]}, grid expects {spec.D}x{spec.D}")


def sample_origins(spec: GridSpec, K: int, rng_seed: int) -> np.ndarray:
    """
    Draw K grid origins uniformly at random.

    Without replacement; with replacement only when the grid has fewer than K
    positions. Deterministic for a given seed.
    """
    if K < 1:
        raise InvalidInputError("bag size K must be >= 1")
    origins = grid_origins(spec)
    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(len(origins), size=K, replace=len(origins) < K)
    return origins[chosen]


def sample_bag(image: ImageRecord, spec: GridSpec, K: int, rng_seed: int,
               pixels: Optional[np.ndarray] = None) -> PatchBag:
    """
    Random training bag of K patches.

    Args:
        image: Source record
        spec: Grid at the training overlap t
        K: Bag size
        rng_seed: Seed of this bag; vary it per epoch for fresh patches
        pixels: Already loaded pixels, to skip re-reading the image

    Returns:
        The bag
    """
    pixels = image.load_pixels() if pixels is None else pixels
    _check_image(pixels, spec, image.image_id)
    origins = sample_origins(spec, K, rng_seed)
    return PatchBag(crop_patches(pixels, origins, spec.d), origins, image.image_id)


def dense_bag(image: ImageRecord, spec: GridSpec, pixels: Optional[np.ndarray] = None) -> PatchBag:
    """Every grid patch once, in row-major order of origins."""
    pixels = image.load_pixels() if pixels is None else pixels
    _check_image(pixels, spec, image.image_id)
    origins = grid_origins(spec)
    return PatchBag(crop_patches(pixels, origins, spec.d), origins, image.image_id)
