from dataclasses import dataclass

import numpy as np

from .baseModel import validate_plane


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB raster, pixels shaped (height, width, 3)."""
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError("RgbImage pixels must be shaped (height, width, 3)")
        if pixels.dtype != np.uint8:
            if np.any(pixels < 0) or np.any(pixels > 255):
                raise ValueError("RgbImage channels must be in [0, 255]")
            pixels = pixels.astype(np.uint8)
        object.__setattr__(self, "pixels", validate_plane("RgbImage", pixels.copy(), ndim=3))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class GrayImage:
    """Real-valued single-channel raster, pixels shaped (height, width)."""
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64)
        object.__setattr__(self, "pixels", validate_plane("GrayImage", pixels))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BinaryImage:
    """Foreground mask with values in {0, 1}."""
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.dtype != bool:
            if not np.all((pixels == 0) | (pixels == 1)):
                raise ValueError("BinaryImage values must be 0 or 1")
        object.__setattr__(self, "pixels", validate_plane("BinaryImage", pixels.astype(np.uint8)))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def mask(self):
        return self.pixels.astype(bool)

    def count(self):
        return int(self.pixels.sum())


@dataclass(frozen=True)
class LabelImage:
    """Connected-component labels, 0 is background and 1..count are components."""
    labels: np.ndarray
    count: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.size and (labels.min() < 0 or labels.max() > self.count):
            raise ValueError("labels must lie in 0..count")
        object.__setattr__(self, "labels", validate_plane("LabelImage", labels.astype(np.int64)))

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def height(self):
        return self.labels.shape[0]


@dataclass(frozen=True)
class BBox:
    """Inclusive pixel box, x is the column and y the row."""
    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"Invalid box ({self.x0}, {self.y0}, {self.x1}, {self.y1})")

    @property
    def width(self):
        return self.x1 - self.x0 + 1

    @property
    def height(self):
        return self.y1 - self.y0 + 1

    @property
    def area(self):
        return self.width * self.height

    @property
    def center(self):
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def contains(self, x, y):
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def intersection_area(self, other):
        w = min(self.x1, other.x1) - max(self.x0, other.x0) + 1
        h = min(self.y1, other.y1) - max(self.y0, other.y0) + 1
        if w <= 0 or h <= 0:
            return 0
        return w * h

    def slices(self):
        """Row and column slices for indexing a (height, width) array."""
        return slice(self.y0, self.y1 + 1), slice(self.x0, self.x1 + 1)

    def to_list(self):
        return [self.x0, self.y0, self.x1, self.y1]
