"""Image containers I/O, color conversions and overlays."""
import io
import os
import logging

import numpy as np
from PIL import Image
from skimage import color, draw

from models.baseModel import PnmError
from models.imageModel import RgbImage, GrayImage, BinaryImage
from models.detectionModel import Kind, Direction

logger = logging.getLogger(__name__)

PNM_EXTENSIONS = {".pgm", ".ppm", ".pnm"}
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

BOX_COLORS = {
    Kind.FACE: (0, 255, 0),
    Kind.BACK_OF_HEAD: (255, 0, 0),
}


def _header_tokens(data, start, count):
    """Read `count` whitespace separated header tokens, skipping # comments."""
    tokens = []
    pos = start
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PnmError("malformed header: unexpected end of file")
        if data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        end = pos
        while end < n and not data[end:end + 1].isspace() and data[end:end + 1] != b"#":
            end += 1
        token = data[pos:end]
        if not token.isdigit():
            raise PnmError(f"malformed header: expected a number, got {token[:16]!r}")
        tokens.append(int(token))
        pos = end
    return tokens, pos


def load_pnm(path):
    """Load a P2/P3/P5/P6 file with maxval 255.

    PGM gives a GrayImage, PPM an RgbImage. Raises PnmError with a distinct
    message for a missing file, a malformed header, an unsupported maxval and a
    truncated payload.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        raise PnmError(f"file not found: {path}") from None
    except OSError as e:
        raise PnmError(f"cannot read {path}: {e}") from None
    return decode_pnm(data, path)


def decode_pnm(data, path="<bytes>"):
    """Parse PNM bytes; `path` only names the source in error messages."""
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise PnmError(f"malformed header: unknown magic {magic!r} in {path}")
    (width, height, maxval), pos = _header_tokens(data, 2, 3)
    if width < 1 or height < 1:
        raise PnmError(f"malformed header: invalid size {width}x{height}")
    if maxval != 255:
        raise PnmError(f"unsupported maxval {maxval} in {path} (only 255 is supported)")

    channels = 3 if magic in (b"P3", b"P6") else 1
    expected = width * height * channels

    if magic in (b"P5", b"P6"):
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise PnmError("malformed header: missing whitespace before raster")
        raster = data[pos + 1:pos + 1 + expected]
        if len(raster) < expected:
            raise PnmError(f"truncated payload: expected {expected} bytes, got {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = data[pos:].split()
        if len(body) < expected:
            raise PnmError(f"truncated payload: expected {expected} samples, got {len(body)}")
        try:
            values = np.array([int(v) for v in body[:expected]], dtype=np.int64)
        except ValueError:
            raise PnmError("malformed payload: non-numeric sample") from None
        if values.min() < 0 or values.max() > maxval:
            raise PnmError(f"malformed payload: sample outside 0..{maxval}")
        values = values.astype(np.uint8)

    if channels == 3:
        return RgbImage(values.reshape(height, width, 3))
    return GrayImage(values.reshape(height, width))


def quantize(img):
    """Round and clip a gray plane to 8-bit levels."""
    pixels = img.pixels if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    return np.clip(np.rint(pixels), 0, 255).astype(np.uint8)


def _raster(img):
    if isinstance(img, RgbImage):
        return img.pixels, b"P6", b"P3"
    if isinstance(img, BinaryImage):
        return img.pixels * np.uint8(255), b"P5", b"P2"
    if isinstance(img, GrayImage):
        return quantize(img), b"P5", b"P2"
    raise TypeError(f"Cannot write {type(img).__name__} as PNM")


def encode_pnm(img, binary=True):
    raster, binary_magic, ascii_magic = _raster(img)
    height, width = raster.shape[:2]
    magic = binary_magic if binary else ascii_magic
    header = magic + f"\n{width} {height}\n255\n".encode("ascii")
    if binary:
        return header + np.ascontiguousarray(raster).tobytes()
    rows = raster.reshape(height, -1)
    body = "\n".join(" ".join(str(v) for v in row) for row in rows)
    return header + body.encode("ascii") + b"\n"


def save_pnm(img, path, binary=True):
    """Write RGB as PPM, gray and binary as PGM (binary planes as 0/255)."""
    try:
        with open(path, "wb") as fh:
            fh.write(encode_pnm(img, binary=binary))
    except OSError as e:
        raise PnmError(f"cannot write {path}: {e}") from None


def load_image(path):
    """PNM through load_pnm, anything else Pillow can decode as RGB."""
    if os.path.splitext(str(path))[1].lower() in PNM_EXTENSIONS:
        return load_pnm(path)
    try:
        with Image.open(path) as im:
            return RgbImage(np.asarray(im.convert("RGB")))
    except FileNotFoundError:
        raise PnmError(f"file not found: {path}") from None
    except OSError as e:
        raise PnmError(f"cannot decode {path}: {e}") from None


def decode_image(data, name="<upload>"):
    """In-memory counterpart of load_image for uploaded bytes."""
    if data[:2] in (b"P2", b"P3", b"P5", b"P6"):
        return decode_pnm(data, name)
    try:
        with Image.open(io.BytesIO(data)) as im:
            return RgbImage(np.asarray(im.convert("RGB")))
    except OSError as e:
        raise PnmError(f"cannot decode {name}: {e}") from None


def to_gray(img):
    """BT.601 luma, 0.299 R + 0.587 G + 0.114 B."""
    if isinstance(img, GrayImage):
        return img
    return GrayImage(img.pixels.astype(np.float64) @ LUMA_WEIGHTS)


def hsv_planes(rgb):
    """(H, S, V) planes in [0, 1] for an (h, w, 3) uint8 array."""
    hsv = color.rgb2hsv(np.asarray(rgb, dtype=np.uint8))
    return hsv[..., 0], hsv[..., 1], hsv[..., 2]


def ycbcr_planes(rgb):
    """Studio-swing BT.601 (Y, Cb, Cr) planes for an (h, w, 3) uint8 array."""
    ycc = color.rgb2ycbcr(np.asarray(rgb, dtype=np.uint8))
    return ycc[..., 0], ycc[..., 1], ycc[..., 2]


def _pixel(r, g, b):
    for c in (r, g, b):
        if not 0 <= c <= 255:
            raise ValueError(f"channel value {c} outside [0, 255]")
    return np.array([[[r, g, b]]], dtype=np.uint8)


def rgb_to_hsv(r, g, b):
    h, s, v = hsv_planes(_pixel(r, g, b))
    return float(h[0, 0]), float(s[0, 0]), float(v[0, 0])


def rgb_to_ycbcr(r, g, b):
    y, cb, cr = ycbcr_planes(_pixel(r, g, b))
    return float(y[0, 0]), float(cb[0, 0]), float(cr[0, 0])


def _outline(pixels, box, rgb, thickness=2):
    height, width = pixels.shape[:2]
    x0, y0 = max(box.x0, 0), max(box.y0, 0)
    x1, y1 = min(box.x1, width - 1), min(box.y1, height - 1)
    if x0 > x1 or y0 > y1:
        return
    pixels[y0:min(y0 + thickness, y1 + 1), x0:x1 + 1] = rgb
    pixels[max(y1 - thickness + 1, y0):y1 + 1, x0:x1 + 1] = rgb
    pixels[y0:y1 + 1, x0:min(x0 + thickness, x1 + 1)] = rgb
    pixels[y0:y1 + 1, max(x1 - thickness + 1, x0):x1 + 1] = rgb


def _arrow(pixels, centroid, direction, rgb, length=12):
    cx, cy = int(round(centroid[0])), int(round(centroid[1]))
    if direction is None:
        rr, cc = draw.disk((cy, cx), 2, shape=pixels.shape[:2])
        pixels[rr, cc] = rgb
        return
    sign = 1 if direction is Direction.RIGHT else -1
    tip = cx + sign * length
    strokes = [
        (cy, cx - sign * length, cy, tip),
        (cy, tip, cy - length // 3, tip - sign * length // 3),
        (cy, tip, cy + length // 3, tip - sign * length // 3),
    ]
    height, width = pixels.shape[:2]
    for r0, c0, r1, c1 in strokes:
        rr, cc = draw.line(r0, c0, r1, c1)
        keep = (rr >= 0) & (rr < height) & (cc >= 0) & (cc < width)
        pixels[rr[keep], cc[keep]] = rgb


def render_overlay(img, detections):
    """Copy of `img` with 2-px box outlines and a direction arrow per detection."""
    pixels = np.array(img.pixels, copy=True)
    for det in detections:
        rgb = BOX_COLORS[det.kind]
        _outline(pixels, det.box, rgb)
        _arrow(pixels, det.centroid, det.direction, rgb)
    return RgbImage(pixels)


def save_overlay(img, detections, path):
    """Write the overlay as PPM; later detections are drawn over earlier ones."""
    save_pnm(render_overlay(img, detections), path)
    logger.info(f"Overlay with {len(detections)} detection(s) written to {path}")
