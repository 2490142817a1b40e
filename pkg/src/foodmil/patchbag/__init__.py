"""Patch grids and bags of patches."""

from .bag_sampler import PatchBag, crop_patches, dense_bag, sample_bag, sample_origins
from .grid import GridSpec, count_mismatch, count_patches, enumerate_grid, grid_origins

__all__ = [
    "GridSpec",
    "PatchBag",
    "count_mismatch",
    "count_patches",
    "crop_patches",
    "dense_bag",
    "enumerate_grid",
    "grid_origins",
    "sample_bag",
    "sample_origins",
]
