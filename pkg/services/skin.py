"""Rule-based skin classification: two RGB models, an HSV model and a YCbCr model, ANDed."""
import logging

import numpy as np

from models.imageModel import BinaryImage, RgbImage
from . import imgcore, segment

logger = logging.getLogger(__name__)

MIN_SKIN_AREA = 100


def _rgb1(r, g, b):
    rg = np.abs(r - g)
    rb = np.abs(r - b)
    first = (r > 60) & (g > 40) & (b > 20) & (r > g) & (r > b) & (rg > 10) & (rg < 45) & (rb < rg)
    second = (rg < 45) & (rb > 10) & (rg < rb)
    return first | second


def _rgb2(r, g, b):
    total = r + g + b
    safe = np.where(total > 0, total, 1)
    rn = r / safe
    gn = g / safe
    # black pixels have no chromaticity and never pass
    return (total > 0) & (rn >= 0.36) & (rn <= 0.44) & (gn >= 0.2) & (gn <= 0.36)


def _hsv(pixels):
    h, s, v = imgcore.hsv_planes(pixels)
    return (h >= 0) & (h <= 1) & (s >= 0.1) & (s <= 0.3) & (v >= 0.2) & (v <= 0.8)


def _ycbcr(pixels):
    _, cb, cr = imgcore.ycbcr_planes(pixels)
    return (cb >= 110.5) & (cb <= 135.5) & (cr >= 135) & (cr <= 145)


def skin_models(rgb):
    """The four individual rule masks keyed rgb1, rgb2, hsv and ycbcr."""
    pixels = rgb.pixels if isinstance(rgb, RgbImage) else np.asarray(rgb, dtype=np.uint8)
    channels = pixels.astype(np.int64)
    r, g, b = channels[..., 0], channels[..., 1], channels[..., 2]
    return {
        "rgb1": _rgb1(r, g, b),
        "rgb2": _rgb2(r, g, b),
        "hsv": _hsv(pixels),
        "ycbcr": _ycbcr(pixels),
    }


def skin_pixel(r, g, b):
    for c in (r, g, b):
        if not 0 <= c <= 255:
            raise ValueError(f"channel value {c} outside [0, 255]")
    models = skin_models(np.array([[[r, g, b]]], dtype=np.uint8))
    return bool(all(mask[0, 0] for mask in models.values()))


def skin_mask(rgb):
    """Pointwise conjunction of the four models, no morphology."""
    models = skin_models(rgb)
    mask = models["rgb1"] & models["rgb2"] & models["hsv"] & models["ycbcr"]
    return BinaryImage(mask)


def skin_boxes(mask, min_area=MIN_SKIN_AREA):
    """Boxes of the 8-connected skin regions holding at least `min_area` pixels."""
    labels = segment.connected_components(mask, connectivity=8)
    if labels.count == 0:
        return []
    sizes = segment.component_sizes(labels)
    boxes = segment.bounding_boxes(labels)
    kept = [box for box, size in zip(boxes, sizes) if size >= min_area]
    logger.debug(f"{len(kept)} of {labels.count} skin region(s) kept (min area {min_area})")
    return kept
