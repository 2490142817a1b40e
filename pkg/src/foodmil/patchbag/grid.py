"""
Patch grid geometry

Square dxd patches on a DxD image, adjacent patches sharing a fraction
`overlap` of their side. Origins are evenly spaced from 0 to D-d inclusive so
the grid always reaches both image borders.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..exceptions import InvalidInputError

# Absorbs float error in d*(1-t) so exact divisions are not rounded up.
_EPS = 1e-9


@dataclass(frozen=True)
class GridSpec:
    D: int
    d: int
    overlap: float

    def __post_init__(self):
        if self.d <= 0 or self.D <= 0:
            raise InvalidInputError(f"patch and image sizes must be positive (D={self.D}, d={self.d})")
        if self.d > self.D:
            raise InvalidInputError(f"patch size d={self.d} exceeds image size D={self.D}")
        if not 0.0 <= self.overlap < 1.0:
            raise InvalidInputError(f"overlap must lie in [0, 1), got {self.overlap}")

    @property
    def stride(self) -> float:
        return self.d * (1.0 - self.overlap)

    @property
    def span(self) -> int:
        """Free travel of a patch along one axis, D - d."""
        return self.D - self.d

    def positions_per_axis(self) -> int:
        if self.span == 0:
            return 1
        return int(math.ceil(1.0 + self.span / self.stride - _EPS))

    def stride_divides_span(self) -> bool:
        steps = self.span / self.stride
        return abs(steps - round(steps)) < 1e-6


def axis_positions(spec: GridSpec) -> np.ndarray:
    """Evenly spaced origins along one axis, both endpoints included, rounded half up."""
    n = spec.positions_per_axis()
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    exact = np.arange(n) * (spec.span / float(n - 1))
    return np.floor(exact + 0.5).astype(np.int64)


def enumerate_grid(spec: GridSpec) -> List[Tuple[int, int]]:
    """
    All patch origins of the grid, row-major.

    Args:
        spec: Grid geometry

    Returns:
        n*n (row, col) top-left coordinates, n = ceil(1 + (D-d)/(d(1-t)))
    """
    positions = axis_positions(spec).tolist()
    return [(row, col) for row in positions for col in positions]


def grid_origins(spec: GridSpec) -> np.ndarray:
    """enumerate_grid as an (n*n, 2) integer array."""
    positions = axis_positions(spec)
    rows, cols = np.meshgrid(positions, positions, indexing="ij")
    return np.stack([rows.ravel(), cols.ravel()], axis=1)


def count_patches(spec: GridSpec) -> int:
    """
    Closed-form patch count K_test = ceil((1 + (D-d)/(d(1-t)))^2).

    Equals len(enumerate_grid(spec)) whenever the stride divides D-d.
    """
    per_axis = 1.0 + spec.span / spec.stride
    return int(math.ceil(per_axis * per_axis - _EPS))


def count_mismatch(spec: GridSpec) -> int:
    """Enumerated grid size minus the closed-form count; zero when the stride divides D-d."""
    return spec.positions_per_axis() ** 2 - count_patches(spec)
