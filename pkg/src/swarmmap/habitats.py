"""Synthetic habitats."""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .model import Habitat


def cross_mask(dims: tuple[int, int], arm_thickness: int) -> np.ndarray:
    """Boolean plus shape: two centred bands of width ``arm_thickness``
    spanning the full height and width."""
    height, width = dims
    if arm_thickness < 1 or arm_thickness > min(height, width):
        raise DomainError(f"arm thickness {arm_thickness} does not fit in {dims}")
    r0 = (height - arm_thickness) // 2
    c0 = (width - arm_thickness) // 2
    mask = np.zeros(dims, dtype=bool)
    mask[r0:r0 + arm_thickness, :] = True
    mask[:, c0:c0 + arm_thickness] = True
    return mask


def tile_squares(
    region: np.ndarray,
    square_sizes,
    rng: np.random.Generator,
    background: int,
) -> np.ndarray:
    """Grey values for ``region`` covered by squares of random size and grey.

    Squares are laid in raster order at the first uncovered cell and clipped
    to the region. Each square gets a grey drawn uniformly from 0..255
    excluding ``background`` and the grey of the square just placed.
    """
    sizes = [int(s) for s in square_sizes]
    if not sizes or min(sizes) < 1:
        raise DomainError(f"square sizes must be positive, got {square_sizes!r}")
    height, width = region.shape
    grey = np.full(region.shape, background, dtype=np.int64)
    covered = ~region.copy()
    previous = background
    for r in range(height):
        for c in range(width):
            if covered[r, c]:
                continue
            size = sizes[rng.integers(len(sizes))]
            value = previous
            while value in (previous, background):
                value = int(rng.integers(0, 256))
            block = (slice(r, min(r + size, height)), slice(c, min(c + size, width)))
            free = ~covered[block]
            grey[block][free] = value
            covered[block] = True
            previous = value
    return grey


def generate_cross(
    dims: tuple[int, int],
    arm_thickness: int,
    square_sizes=(2, 3, 4),
    seed: int = 0,
    background: int = 128,
    inverted: bool = False,
) -> tuple[Habitat, np.ndarray]:
    """Plus-shaped figure built from small squares on a flat background.

    With ``inverted`` the roles swap: the plus is flat and everything around
    it is tiled with squares. The returned mask always marks the tiled
    figure, which is the region a perceiving colony should mark.
    """
    height, width = dims
    if height < 3 or width < 3:
        raise DomainError(f"habitat must be at least 3x3, got {dims}")
    if not 0 <= background <= 255:
        raise DomainError(f"background grey must be in [0, 255], got {background}")
    mask = cross_mask(dims, arm_thickness)
    if inverted:
        mask = ~mask
    grey = tile_squares(mask, square_sizes, np.random.default_rng(seed), background)
    return Habitat(grey), mask
