"""Binary-image primitives: Otsu, Canny, hole filling, components, hulls and boxes."""
import logging

import numpy as np
from scipy import ndimage

from models.baseModel import DegenerateInputError
from models.imageModel import BinaryImage, LabelImage, BBox
from . import imgcore

logger = logging.getLogger(__name__)

CANNY_SIGMA = 1.0
CANNY_LO = 0.1
CANNY_HI = 0.3
# relative slack in non-maximum suppression so rounding noise cannot break ties
NMS_TOLERANCE = 1e-9


def _structure(connectivity):
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    return ndimage.generate_binary_structure(2, 1 if connectivity == 4 else 2)


def histogram(img):
    """256-bin histogram over the quantized levels of a [0, 255] plane."""
    return np.bincount(imgcore.quantize(img).ravel(), minlength=256)


def otsu_threshold(img):
    """Level maximizing between-class variance; foreground is pixel > level.

    Variances are compared as exact integer ratios so the smallest maximizing
    level is returned deterministically. A single-level image returns that level.
    """
    hist = [int(c) for c in histogram(img)]
    total = sum(hist)
    if total == 0:
        raise ValueError("otsu_threshold needs a non-empty image")
    total_sum = sum(level * count for level, count in enumerate(hist))

    best_level = None
    best_num, best_den = 0, 1
    n0 = s0 = 0
    for level in range(256):
        n0 += hist[level]
        s0 += level * hist[level]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        # between-class variance is (s0*N - S*n0)^2 / (N^2 n0 n1)
        num = (s0 * total - total_sum * n0) ** 2
        den = n0 * n1
        if best_level is None or num * best_den > best_num * den:
            best_level, best_num, best_den = level, num, den

    if best_level is None or best_num == 0:
        occupied = [level for level, count in enumerate(hist) if count]
        return occupied[-1]
    return best_level


def binarize(img, level, dark=False):
    """Foreground = quantized pixel > level, or <= level when `dark`."""
    levels = imgcore.quantize(img)
    return BinaryImage(levels <= level if dark else levels > level)


def dark_mask(img):
    """Dark side of the Otsu split; a single-level image has no dark side."""
    levels = imgcore.quantize(img)
    if levels.min() == levels.max():
        raise DegenerateInputError("image has a single intensity level, nothing to separate")
    return binarize(img, otsu_threshold(img), dark=True)


def _suppress(magnitude, direction):
    """Keep pixels that are maxima along their quantized gradient direction."""
    height, width = magnitude.shape
    padded = np.pad(magnitude, 1, mode="constant")
    slack = NMS_TOLERANCE * magnitude.max()

    def neighbour(dy, dx):
        return padded[1 + dy:1 + dy + height, 1 + dx:1 + dx + width]

    # directions quantized modulo pi: 0 horizontal, 1 diagonal, 2 vertical, 3 anti-diagonal
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(magnitude.shape, dtype=bool)
    for sector, (dy, dx) in offsets.items():
        ahead = neighbour(dy, dx)
        behind = neighbour(-dy, -dx)
        peak = (magnitude >= ahead - slack) & (magnitude >= behind - slack)
        keep |= (direction == sector) & peak
    return keep & (magnitude > 0)


def canny(img, sigma=CANNY_SIGMA, lo=CANNY_LO, hi=CANNY_HI):
    """Canny edges with thresholds given as fractions of the maximum gradient."""
    if not 0 < lo < hi <= 1:
        raise ValueError("Canny thresholds must satisfy 0 < lo < hi <= 1")
    if sigma < 0.5:
        raise ValueError("Canny sigma must be at least 0.5")
    smoothed = ndimage.gaussian_filter(img.pixels, sigma, mode="nearest")
    gy, gx = np.gradient(smoothed)
    magnitude = np.hypot(gx, gy)
    gmax = magnitude.max()
    if gmax <= 0:
        return BinaryImage(np.zeros(magnitude.shape, dtype=bool))

    angle = np.mod(np.arctan2(gy, gx), np.pi)
    direction = np.mod(np.rint(angle / (np.pi / 4)).astype(int), 4)
    thin = _suppress(magnitude, direction)

    strong = thin & (magnitude >= hi * gmax)
    weak = thin & (magnitude >= lo * gmax)
    labels, _ = ndimage.label(weak, structure=_structure(8))
    connected = np.unique(labels[strong])
    edges = np.isin(labels, connected[connected > 0])
    return BinaryImage(edges)


def fill_holes(img):
    """Set background regions not 4-connected to the border to foreground."""
    return BinaryImage(ndimage.binary_fill_holes(img.mask, structure=_structure(4)))


def complement(img):
    return BinaryImage(1 - img.pixels)


def connected_components(img, connectivity=8):
    """Label foreground components 1..K in raster order of their first pixel."""
    labels, count = ndimage.label(img.mask, structure=_structure(connectivity))
    if count:
        # relabel by first raster occurrence
        present, first = np.unique(labels.ravel(), return_index=True)
        order = present[present > 0][np.argsort(first[present > 0], kind="stable")]
        remap = np.zeros(count + 1, dtype=np.int64)
        remap[order] = np.arange(1, count + 1)
        labels = remap[labels]
    return LabelImage(labels=labels, count=int(count))


def component_sizes(labels):
    """Pixel count of each label 1..K."""
    return np.bincount(labels.labels.ravel(), minlength=labels.count + 1)[1:]


def largest_component(labels):
    """Mask of the label with the most pixels; ties go to the smallest label."""
    if labels.count == 0:
        raise DegenerateInputError("no foreground component")
    winner = int(np.argmax(component_sizes(labels))) + 1
    return BinaryImage(labels.labels == winner)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points):
    """Monotone-chain hull of integer (x, y) points, counter-clockwise, no repeats."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def convex_hull_mask(img):
    """Rasterized hull of the foreground pixel centers and the mask centroid (x, y).

    A pixel is inside when its center is inside or on the hull polygon.
    """
    ys, xs = np.nonzero(img.mask)
    if xs.size == 0:
        raise DegenerateInputError("convex hull of an empty mask")
    hull = convex_hull(list(zip(xs.tolist(), ys.tolist())))
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    gy, gx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    inside = np.ones(gx.shape, dtype=bool)
    if len(hull) >= 2:
        for (ax, ay), (bx, by) in zip(hull, hull[1:] + hull[:1]):
            inside &= (bx - ax) * (gy - ay) - (by - ay) * (gx - ax) >= 0
    mask = np.zeros(img.pixels.shape, dtype=bool)
    mask[y0:y1 + 1, x0:x1 + 1] = inside
    my, mx = np.nonzero(mask)
    return BinaryImage(mask), (float(mx.mean()), float(my.mean()))


def bounding_boxes(labels):
    """One tight inclusive box per label, in label order."""
    boxes = []
    for rows, cols in ndimage.find_objects(labels.labels, max_label=labels.count):
        boxes.append(BBox(x0=cols.start, y0=rows.start, x1=cols.stop - 1, y1=rows.stop - 1))
    return boxes
