# flipmode/layouts.py
"""Multipixel detector layouts: disjoint cell-aligned pixels with real gains."""

import logging
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidLayout

logger = logging.getLogger(__name__)


class PixelLayout:
    """Pixel label per grid cell plus one real gain per pixel.

    Every cell belongs to exactly one pixel, so the pixels cover the window
    with no overlap.
    """

    def __init__(self, grid, pixel_of_cell, gains, name="custom"):
        labels = np.array(pixel_of_cell)
        gains = np.array(gains, dtype=float).reshape(-1)
        if labels.shape != grid.shape:
            raise InvalidLayout(f"Label map shape {labels.shape} does not match {grid}.")
        if not np.issubdtype(labels.dtype, np.integer):
            raise InvalidLayout("Pixel labels must be integers.")
        if gains.size == 0:
            raise InvalidLayout("Layout needs at least one pixel gain.")
        if labels.min() < 0 or labels.max() >= gains.size:
            raise InvalidLayout(
                f"Pixel labels span [{labels.min()}, {labels.max()}] but only "
                f"{gains.size} gains were given."
            )
        if not np.all(np.isfinite(gains)):
            raise InvalidLayout("Gains must be finite.")
        if not np.any(gains != 0):
            raise InvalidLayout("At least one gain must be nonzero.")
        labels = labels.astype(np.int64)
        labels.setflags(write=False)
        gains.setflags(write=False)
        self.grid = grid
        self.pixel_of_cell = labels
        self.gains = gains
        self.name = name

    @property
    def n_pixels(self):
        return self.gains.size

    def gain_map(self):
        """Gain sigma_i of the pixel owning each cell, shape ``(ny, nx)``."""
        return self.gains[self.pixel_of_cell]

    def pixel_mask(self, index):
        return self.pixel_of_cell == index

    def with_gains(self, gains):
        return PixelLayout(self.grid, self.pixel_of_cell, gains, name=self.name)

    def scaled(self, factor):
        return self.with_gains(self.gains * factor)

    def __repr__(self):
        return f"PixelLayout({self.name}, {self.n_pixels} pixels, gains={self.gains.tolist()})"


def _gains_for(name, gains, n_pixels):
    gains = list(gains)
    if len(gains) != n_pixels:
        raise InvalidLayout(f"Layout '{name}' has {n_pixels} pixels but {len(gains)} gains were given.")
    return gains


def half_x(grid, gains):
    """Pixel 0 is the left half (x < 0), pixel 1 the right half."""
    x, _ = grid.mesh()
    return PixelLayout(grid, (x >= 0).astype(int), _gains_for("half_x", gains, 2), name="half_x")


def half_y(grid, gains):
    """Pixel 0 is the bottom half (y < 0), pixel 1 the top half."""
    _, y = grid.mesh()
    return PixelLayout(grid, (y >= 0).astype(int), _gains_for("half_y", gains, 2), name="half_y")


def quadrants(grid, gains):
    """Labels ``(x >= 0) + 2 * (y >= 0)``."""
    x, y = grid.mesh()
    labels = (x >= 0).astype(int) + 2 * (y >= 0).astype(int)
    return PixelLayout(grid, labels, _gains_for("quadrants", gains, 4), name="quadrants")


def annulus(grid, r1, r2, gains):
    """Disk r < r1, ring r1 <= r < r2 and the outside r >= r2."""
    if not (math.isfinite(r1) and math.isfinite(r2)) or not 0 < r1 < r2:
        raise InvalidLayout(f"Annulus needs 0 < r1 < r2, got r1={r1}, r2={r2}.")
    x, y = grid.mesh()
    radius = np.hypot(x, y)
    labels = np.where(radius < r1, 0, np.where(radius < r2, 1, 2))
    return PixelLayout(grid, labels, _gains_for("annulus", gains, 3), name="annulus")


def load_label_mask(path):
    """Read an 8-bit label image (PGM); gray level = pixel index."""
    with Image.open(Path(path)) as image:
        if image.mode not in ("L", "P", "I"):
            raise InvalidLayout(f"Mask '{path}' must be a grayscale label image, got mode {image.mode}.")
        # image rows run top to bottom, grid rows run along increasing y
        return np.asarray(image, dtype=np.int64)[::-1, :]


def from_mask(grid, path, gains):
    labels = load_label_mask(path)
    if labels.shape != grid.shape:
        raise InvalidLayout(f"Mask '{path}' has shape {labels.shape}, grid expects {grid.shape}.")
    return PixelLayout(grid, labels, gains, name=f"mask:{Path(path).name}")


def save_label_mask(layout, path):
    if layout.n_pixels > 256:
        raise InvalidLayout("PGM label masks hold at most 256 pixels.")
    image = Image.fromarray(layout.pixel_of_cell[::-1, :].astype(np.uint8))
    image.save(Path(path), format="PPM")
    return Path(path)


PRIMITIVES = {
    "half_x": half_x,
    "half_y": half_y,
    "quadrants": quadrants,
}
