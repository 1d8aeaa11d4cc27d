"""Synthetic frames with known answers; shared by the tests and `bench`.

`face_frame` and `head_frame` are plain RGB frames meant to go through the
whole demodulation pipeline. `face_block` is a hand-drawn FM block for the
patch-counting stage alone.
"""
import math

import numpy as np

from models.imageModel import BBox, GrayImage, RgbImage
from models.knnModel import FACE, NONFACE
from . import detect

SKIN_RGB = (170, 140, 120)
GRAY_RGB = (128, 128, 128)
BLACK_RGB = (0, 0, 0)

FACE_SIZE = 60

# black-rimmed skin oval centred in the middle block of a light frame
FACE_FRAME = 180
FACE_OFFSET = 60
FACE_WALL = 210
FACE_CENTER = (89.5, 89.5)
FACE_RIM = (27, 30)
FACE_SKIN = (24, 26)
FACE_FEATURES = (BBox(x0=68, y0=76, x1=80, y1=80), BBox(x0=70, y0=100, x1=88, y1=104))

# striped hair block on a light wall, skin patch on its right edge
HEAD_FRAME = 480
HEAD_BLOCK = (130, 349)
HEAD_WALL = 220
HAIR_LEVELS = (40, 90)
HEAD_SKIN = BBox(x0=320, y0=200, x1=370, y1=260)


def face_block(mirror=False):
    """60x60 FM face: dark outline with eye, nose and mouth bars left of center on white."""
    block = np.full((FACE_SIZE, FACE_SIZE), 255.0)
    block[4, 8:52] = 0
    block[55, 8:52] = 0
    block[4:56, 8] = 0
    block[4:56, 51] = 0
    block[16:18, 11:19] = 0
    block[16:18, 22:30] = 0
    block[32:34, 18:26] = 0
    block[42:44, 14:30] = 0
    if mirror:
        block = block[:, ::-1]
    return GrayImage(block)


def _oval(shape, center, radii):
    y, x = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
    return ((x - center[0]) / radii[0]) ** 2 + ((y - center[1]) / radii[1]) ** 2 <= 1


def face_frame(mirror=False):
    """Skin oval with a black rim, eye and mouth left of center; the face looks left.

    The oval fills the block at (FACE_OFFSET, FACE_OFFSET). Mirroring keeps
    the block in place and turns the face to the right.
    """
    shape = (FACE_FRAME, FACE_FRAME)
    rgb = np.full(shape + (3,), FACE_WALL, dtype=np.uint8)
    rgb[_oval(shape, FACE_CENTER, FACE_RIM)] = BLACK_RGB
    rgb[_oval(shape, FACE_CENTER, FACE_SKIN)] = SKIN_RGB
    for box in FACE_FEATURES:
        rgb[box.slices()] = BLACK_RGB
    if mirror:
        rgb = rgb[:, ::-1]
    return RgbImage(rgb)


def face_box():
    return BBox(x0=FACE_OFFSET, y0=FACE_OFFSET, x1=FACE_OFFSET + FACE_SIZE - 1, y1=FACE_OFFSET + FACE_SIZE - 1)


def face_model(fm, size=FACE_SIZE, stride=30, k=3, offset=(FACE_OFFSET, FACE_OFFSET)):
    """KNN model that labels the block at `offset` Face and every other block of `fm` NonFace."""
    samples = []
    for box, block in detect.extract_blocks(fm, size, stride):
        label = FACE if (box.x0, box.y0) == tuple(offset) else NONFACE
        samples.extend([(block, label)] * k)
    return detect.knn_from_samples(samples, k)


def head_frame(shift=0, mirror=False, with_skin=True):
    """Dark hair block of alternating stripes on a light wall, seen from behind.

    The skin patch overlaps the right edge of the head, so the person looks
    right; `mirror` flips the frame and the answer.
    """
    size = HEAD_FRAME
    lo, hi = HEAD_BLOCK
    rgb = np.full((size, size, 3), HEAD_WALL, dtype=np.uint8)
    columns = np.arange(lo, hi + 1)
    stripes = np.where((columns - lo) % 2 == 0, *HAIR_LEVELS).astype(np.uint8)
    rgb[lo:hi + 1, columns + shift] = stripes[np.newaxis, :, np.newaxis]
    if with_skin:
        box = HEAD_SKIN
        rgb[box.y0:box.y1 + 1, box.x0 + shift:box.x1 + 1 + shift] = SKIN_RGB
    if mirror:
        rgb = rgb[:, ::-1]
    return RgbImage(rgb)


def head_center(shift=0, mirror=False):
    """Center (x, y) of the hair block."""
    lo, hi = HEAD_BLOCK
    x = (lo + hi) / 2.0 + shift
    if mirror:
        x = HEAD_FRAME - 1 - x
    return x, (lo + hi) / 2.0


def plane_wave(size, u, v, amplitude=1.0):
    """amplitude * cos(u x + v y) with (u, v) rounded to the nearest DFT bin; returns (image, u, v)."""
    step = 2 * math.pi / size
    u = round(u / step) * step
    v = round(v / step) * step
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    return GrayImage(amplitude * np.cos(u * x + v * y)), u, v


def am_fm_wave(size, u, v, depth=0.3):
    """(1 + depth cos(2 pi x / size)) cos(u x + v y), bin-aligned; returns (image, envelope, phase)."""
    wave, u, v = plane_wave(size, u, v)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    envelope = 1.0 + depth * np.cos(2 * math.pi * x / size)
    phase = u * x + v * y
    return GrayImage(envelope * wave.pixels), envelope, phase


def nonface_model(size=FACE_SIZE, k=3):
    """KNN model holding only blank NonFace blocks, so face detection never fires."""
    blank = np.full((size, size), 255.0)
    return detect.knn_from_samples([(blank, NONFACE)] * k, k)
