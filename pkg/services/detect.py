"""Face detection (skin AND KNN on FM blocks) and back-of-head detection on AM/FM planes."""
import os
import logging

import numpy as np
from skimage.transform import integral_image

from models.baseModel import DegenerateInputError, ModelFileError, PnmError
from models.imageModel import BBox, BinaryImage, GrayImage
from models.detectionModel import Kind, Detection
from models.knnModel import KnnModel, FACE, NONFACE, LABELS
from . import imgcore, segment, skin

logger = logging.getLogger(__name__)

BLOCK_SIZE = 60
STRIDE = 30
KNN_K = 3
SKIN_FRACTION = 0.25
HEAD_WINDOW = 200
TOP_COLUMNS = 60


def _offsets(extent, size, stride):
    """Block starts along one axis; the last block is snapped to the far edge."""
    starts = list(range(0, extent - size + 1, stride))
    if starts[-1] != extent - size:
        starts.append(extent - size)
    return starts


def extract_blocks(fm, size=BLOCK_SIZE, stride=STRIDE):
    """Raster-order (BBox, block) pairs of size x size blocks at `stride`."""
    if size < 1 or stride < 1:
        raise ValueError("block size and stride must be positive")
    if fm.width < size or fm.height < size:
        raise DegenerateInputError(f"image {fm.width}x{fm.height} is smaller than one {size}x{size} block")
    blocks = []
    for y in _offsets(fm.height, size, stride):
        for x in _offsets(fm.width, size, stride):
            box = BBox(x0=x, y0=y, x1=x + size - 1, y1=y + size - 1)
            blocks.append((box, fm.pixels[box.slices()]))
    return blocks


def _feature(block, model):
    pixels = block.pixels if isinstance(block, GrayImage) else np.asarray(block)
    if pixels.size != model.vector_length:
        raise ValueError(f"block has {pixels.size} values, the model expects {model.vector_length}")
    return imgcore.quantize(pixels).ravel().astype(np.int64)


def knn_classify(model, block):
    """Majority label of the k nearest samples and its vote fraction.

    Squared distances are exact integers and the sort is stable, so equal
    distances resolve by sample order.
    """
    query = _feature(block, model)
    diff = model.features.astype(np.int64) - query
    distances = np.einsum("ij,ij->i", diff, diff)
    nearest = np.argsort(distances, kind="stable")[:model.k]
    face_votes = sum(1 for i in nearest if model.labels[i] == FACE)
    if face_votes * 2 > model.k:
        return FACE, face_votes / model.k
    return NONFACE, (model.k - face_votes) / model.k


def read_manifest(path):
    """(block path, label) rows of a 'path,label' manifest; relative paths resolve against the manifest."""
    base = os.path.dirname(os.path.abspath(path))
    rows = []
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise PnmError(f"cannot read manifest {path}: {e}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.rsplit(",", 1)]
        if len(parts) != 2 or not parts[0]:
            raise ModelFileError(f"{path}:{lineno}: expected 'path,label'")
        block_path, label = parts[0], parts[1].lower()
        if label not in LABELS:
            raise ModelFileError(f"{path}:{lineno}: unknown label '{parts[1]}'")
        rows.append((lineno, os.path.join(base, block_path), label))
    return rows


def knn_from_samples(samples, k=KNN_K):
    """Build a KnnModel from (block, label) pairs; blocks must share one shape."""
    samples = list(samples)
    if len(samples) < k:
        raise ModelFileError(f"KNN needs at least k={k} samples, got {len(samples)}")
    shapes = {np.shape(b.pixels if isinstance(b, GrayImage) else b) for b, _ in samples}
    if len(shapes) != 1:
        raise ModelFileError(f"training blocks differ in shape: {sorted(shapes)}")
    shape = shapes.pop()
    features = np.stack([
        imgcore.quantize(b.pixels if isinstance(b, GrayImage) else b).ravel() for b, _ in samples
    ])
    labels = tuple(label for _, label in samples)
    if len(set(labels)) == 1:
        logger.warning(f"Training set only holds '{labels[0]}' blocks; every query will get that label")
    try:
        return KnnModel(k=k, block_shape=shape, features=features, labels=labels)
    except ValueError as e:
        raise ModelFileError(str(e)) from None


def train_knn(manifest, k=KNN_K):
    """Load every block a manifest names and store them verbatim."""
    samples = []
    for lineno, block_path, label in read_manifest(manifest):
        try:
            block = imgcore.load_image(block_path)
        except PnmError as e:
            raise PnmError(f"{manifest}:{lineno}: {e}") from None
        samples.append((imgcore.to_gray(block), label))
    model = knn_from_samples(samples, k)
    faces = sum(1 for label in model.labels if label == FACE)
    logger.info(f"Trained KNN (k={k}) on {faces} face and {model.n_samples - faces} non-face blocks")
    return model


def save_knn(model, path):
    height, width = model.block_shape
    lines = [f"KNN{model.k} {height} {width} {model.n_samples}"]
    for label, row in zip(model.labels, model.features):
        lines.append(label + " " + " ".join(str(int(v)) for v in row))
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as e:
        raise ModelFileError(f"cannot write model {path}: {e}") from None


def load_knn(path):
    """Parse a model file; any defect raises ModelFileError."""
    try:
        with open(path) as fh:
            lines = [line for line in fh.read().splitlines() if line.strip()]
    except FileNotFoundError:
        raise ModelFileError(f"model file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as e:
        raise ModelFileError(f"cannot read model {path}: {e}") from None
    if not lines:
        raise ModelFileError(f"{path}: empty model file")

    header = lines[0].split()
    try:
        if len(header) != 4 or not header[0].startswith("KNN"):
            raise ValueError
        k, height, width, count = int(header[0][3:]), int(header[1]), int(header[2]), int(header[3])
    except ValueError:
        raise ModelFileError(f"{path}: malformed header '{lines[0]}'") from None
    if len(lines) - 1 != count:
        raise ModelFileError(f"{path}: header announces {count} samples, found {len(lines) - 1}")

    labels = []
    features = np.zeros((count, height * width), dtype=np.uint8)
    for n, line in enumerate(lines[1:]):
        fields = line.split()
        if len(fields) != height * width + 1:
            raise ModelFileError(f"{path}:{n + 2}: expected {height * width} values")
        try:
            values = np.array([int(v) for v in fields[1:]], dtype=np.int64)
        except ValueError:
            raise ModelFileError(f"{path}:{n + 2}: non-numeric value") from None
        if values.min() < 0 or values.max() > 255:
            raise ModelFileError(f"{path}:{n + 2}: value outside 0..255")
        labels.append(fields[0])
        features[n] = values
    try:
        return KnnModel(k=k, block_shape=(height, width), features=features, labels=tuple(labels))
    except ValueError as e:
        raise ModelFileError(f"{path}: {e}") from None


def face_detect(rgb, fm, model, size=BLOCK_SIZE, stride=STRIDE, skin_frac=SKIN_FRACTION):
    """Blocks that are both skin-covered and classified Face, merged into regions.

    Accepted blocks are painted into a mask; every 8-connected region of it
    yields one detection whose box is the region's box and whose score is the
    mean vote fraction of its blocks.
    """
    if (rgb.height, rgb.width) != (fm.height, fm.width):
        raise ValueError(f"RGB {rgb.width}x{rgb.height} and FM {fm.width}x{fm.height} differ in size")
    if model.block_shape != (size, size):
        raise ModelFileError(f"model was trained on {model.block_shape} blocks, pipeline uses {size}x{size}")
    skin_pixels = skin.skin_mask(rgb).mask

    accepted = []
    for box, block in extract_blocks(fm, size, stride):
        if skin_pixels[box.slices()].mean() < skin_frac:
            continue
        label, fraction = knn_classify(model, block)
        if label == FACE:
            accepted.append((box, fraction))
    if not accepted:
        return []

    painted = np.zeros(skin_pixels.shape, dtype=bool)
    for box, _ in accepted:
        painted[box.slices()] = True
    labels = segment.connected_components(BinaryImage(painted), connectivity=8)
    detections = []
    for region in segment.bounding_boxes(labels):
        votes = [f for box, f in accepted if region.contains(box.x0, box.y0) and region.contains(box.x1, box.y1)]
        detections.append(Detection(
            kind=Kind.FACE, box=region, centroid=region.center, score=float(np.mean(votes)),
        ))
    logger.debug(f"{len(accepted)} face block(s) merged into {len(detections)} region(s)")
    return detections


def top_columns(img, m=TOP_COLUMNS):
    """Keep the m non-empty columns with the most foreground, ties to the left."""
    if m < 1:
        raise ValueError("m must be at least 1")
    counts = img.pixels.sum(axis=0)
    order = np.argsort(-counts.astype(np.int64), kind="stable")
    chosen = [c for c in order[:m] if counts[c] > 0]
    kept = np.zeros(img.pixels.shape, dtype=bool)
    kept[:, chosen] = img.mask[:, chosen]
    return BinaryImage(kept)


def window_counts(img, s):
    """Foreground count of every s x s window, indexed by its top-left corner."""
    table = np.pad(integral_image(img.pixels, dtype=np.int64), ((1, 0), (1, 0)))
    return table[s:, s:] - table[:-s, s:] - table[s:, :-s] + table[:-s, :-s]


def highest_dot_density_area(img, s=HEAD_WINDOW):
    """(i, j, rate) of the densest s x s window, row-major first on ties."""
    if s < 1:
        raise ValueError("window size must be positive")
    if img.height < s or img.width < s:
        raise DegenerateInputError(f"image {img.width}x{img.height} is smaller than the {s}x{s} window")
    counts = window_counts(img, s)
    i, j = np.unravel_index(int(np.argmax(counts)), counts.shape)
    return int(i), int(j), float(counts[i, j]) / (s * s)


def refine_head_box(am_dark, window):
    """Box and centroid of the largest dark AM component touching `window`.

    The whole component is kept, also where it leaves the window. Ties go to
    the smallest label; with no component inside the window the window itself
    is returned.
    """
    labels = segment.connected_components(am_dark, connectivity=8)
    touching = np.unique(labels.labels[window.slices()])
    touching = touching[touching > 0]
    if touching.size == 0:
        logger.debug("No dark AM component reaches the densest window, keeping the window")
        return window, window.center
    sizes = segment.component_sizes(labels)
    winner = int(touching[np.argmax(sizes[touching - 1])])
    ys, xs = np.nonzero(labels.labels == winner)
    box = BBox(x0=int(xs.min()), y0=int(ys.min()), x1=int(xs.max()), y1=int(ys.max()))
    return box, (float(xs.mean()), float(ys.mean()))


def back_of_head_detect(am, fm, s=HEAD_WINDOW, m=TOP_COLUMNS,
                        sigma=segment.CANNY_SIGMA, lo=segment.CANNY_LO, hi=segment.CANNY_HI):
    """Densest window of dark AM mass crossed by vertical FM texture.

    The window only locates the head; the reported box is the dark AM
    component it lands on (see refine_head_box).
    """
    if (am.height, am.width) != (fm.height, fm.width):
        raise ValueError(f"AM {am.width}x{am.height} and FM {fm.width}x{fm.height} differ in size")
    if am.height < s or am.width < s:
        raise DegenerateInputError(f"frame {am.width}x{am.height} is smaller than the {s}x{s} head window")

    fm_dark = segment.dark_mask(fm)
    edges = segment.canny(GrayImage(fm_dark.pixels * 255.0), sigma, lo, hi)
    texture = segment.complement(segment.fill_holes(edges))
    am_dark = segment.dark_mask(am)
    combined = BinaryImage(texture.mask & am_dark.mask)
    columns = top_columns(combined, m)
    if columns.count() == 0:
        raise DegenerateInputError("no dark textured pixels for the back of the head")
    i, j, rate = highest_dot_density_area(columns, s)

    window = BBox(x0=j, y0=i, x1=j + s - 1, y1=i + s - 1)
    box, centroid = refine_head_box(am_dark, window)
    return Detection(kind=Kind.BACK_OF_HEAD, box=box, centroid=centroid, score=rate)
