"""Left/right attention: four-patch face direction, away-facing rule and frame orchestration."""
import logging

import numpy as np

from models.baseModel import AttentionError, DegenerateInputError
from models.imageModel import BinaryImage, GrayImage, RgbImage
from models.configModel import CLASSIFIER_ALIASES
from models.detectionModel import Direction, Kind, PatchCounts, Votes, Detection, Abstention, FrameReport
from utils import timed
from . import amfm, detect, segment, skin

logger = logging.getLogger(__name__)

TOP_ROWS = 7


def patch_counts(fm_block, top_rows=TOP_ROWS):
    """Quadrant tally of the dark facial features in an FM face block.

    Returns (PatchCounts, diagnostics). Pixels on the split lines through the
    centroid count as Left and Upper.
    """
    if top_rows < 1:
        raise ValueError("top_rows must be at least 1")
    features = segment.dark_mask(fm_block)
    labels = segment.connected_components(features, connectivity=8)
    if labels.count == 0:
        raise DegenerateInputError("no dark facial features in the face block")
    outline = segment.fill_holes(segment.largest_component(labels))
    hull, (cx, cy) = segment.convex_hull_mask(outline)

    retained = features.mask & hull.mask
    row_counts = retained.sum(axis=1)
    rows = [r for r in np.argsort(-row_counts, kind="stable")[:top_rows] if row_counts[r] > 0]
    kept = np.zeros(retained.shape, dtype=bool)
    kept[rows, :] = retained[rows, :]
    if not kept.any():
        raise DegenerateInputError("face features vanished inside the hull")

    ys, xs = np.nonzero(kept)
    left = xs <= cx
    upper = ys <= cy
    counts = PatchCounts(
        ul=int(np.sum(left & upper)),
        ur=int(np.sum(~left & upper)),
        ll=int(np.sum(left & ~upper)),
        lr=int(np.sum(~left & ~upper)),
    )
    diagnostics = {
        "centroid": (cx, cy),
        "rows": sorted(int(r) for r in rows),
        "hull": BinaryImage(hull.mask),
        "features": BinaryImage(kept),
    }
    return counts, diagnostics


def classify_patch(left_count, right_count):
    """Right only strictly above the y = x line."""
    if left_count < 0 or right_count < 0:
        raise ValueError("counts must be non-negative")
    return Direction.RIGHT if right_count > left_count else Direction.LEFT


def majority_direction(pc):
    votes = Votes(
        upper=classify_patch(pc.ul, pc.ur),
        lower=classify_patch(pc.ll, pc.lr),
        whole=classify_patch(pc.ul + pc.ll, pc.ur + pc.lr),
    )
    rights = [votes.upper, votes.lower, votes.whole].count(Direction.RIGHT)
    return (Direction.RIGHT if rights >= 2 else Direction.LEFT), votes


def classify_face_direction_tree(ul, ll, ur, lr):
    """The published decision tree, transcribed branch for branch.

    Its middle branch answers Right when the left side holds more pixels.
    The tree leaves ul < ur and ll < lr undefined; that case answers Right.
    """
    if ul >= ur:
        if ll >= lr:
            return Direction.LEFT
        if ul + ll >= ur + lr:
            return Direction.RIGHT
        return Direction.LEFT
    if ll >= lr:
        if ul + ll >= ur + lr:
            return Direction.LEFT
        return Direction.RIGHT
    return Direction.RIGHT


def face_direction(pc, classifier="majority"):
    """(direction, votes) under the configured classifier; votes always come from the patch rule."""
    direction, votes = majority_direction(pc)
    classifier = CLASSIFIER_ALIASES.get(classifier, classifier)
    if classifier == "tree":
        direction = classify_face_direction_tree(pc.ul, pc.ll, pc.ur, pc.lr)
    elif classifier != "majority":
        raise ValueError(f"Unknown classifier '{classifier}'")
    return direction, votes


def away_direction(face_box, head_box):
    x_f = face_box.center[0]
    x_b = head_box.center[0]
    return Direction.RIGHT if x_f > x_b else Direction.LEFT


def associate_face_to_head(skin_boxes, head_box):
    """Skin box with the largest positive overlap, first in list on ties."""
    best, best_area = None, 0
    for box in skin_boxes:
        area = box.intersection_area(head_box)
        if area > best_area:
            best, best_area = box, area
    return best


def as_rgb(img):
    """Gray frames become three equal channels so the skin rules can run on them."""
    if isinstance(img, RgbImage):
        return img
    return RgbImage(np.repeat(np.clip(np.rint(img.pixels), 0, 255)[..., np.newaxis], 3, axis=2))


def _face_stage(report, rgb, fm, model, cfg):
    try:
        faces = detect.face_detect(rgb, fm, model, cfg.block_size, cfg.stride, cfg.skin_frac)
    except AttentionError as e:
        report.abstentions.append(Abstention(stage="face", reason=str(e)))
        return
    for face in faces:
        block = GrayImage(fm.pixels[face.box.slices()])
        try:
            counts, _ = patch_counts(block, cfg.top_rows)
        except DegenerateInputError as e:
            report.abstentions.append(Abstention(stage="face_direction", reason=f"box {face.box.to_list()}: {e}"))
            report.detections.append(face)
            continue
        direction, votes = face_direction(counts, cfg.classifier)
        report.detections.append(Detection(
            kind=face.kind, box=face.box, centroid=face.centroid, score=face.score,
            direction=direction, votes=votes, patch_counts=counts,
        ))


def _head_stage(report, rgb, am, fm, cfg):
    try:
        head = detect.back_of_head_detect(
            am, fm, cfg.head_window, cfg.top_columns, cfg.canny_sigma, cfg.canny_lo, cfg.canny_hi,
        )
    except AttentionError as e:
        report.abstentions.append(Abstention(stage="back_of_head", reason=str(e)))
        return
    boxes = skin.skin_boxes(skin.skin_mask(rgb), cfg.min_skin_area)
    face_box = associate_face_to_head(boxes, head.box)
    if face_box is None:
        report.abstentions.append(Abstention(stage="away_direction", reason="no skin region overlaps the back of the head"))
        report.detections.append(head)
        return
    report.detections.append(Detection(
        kind=head.kind, box=head.box, centroid=head.centroid, score=head.score,
        direction=away_direction(face_box, head.box),
    ))


def analyze_planes(rgb, am, fm, model, cfg, frame_id="", timings=None):
    """Face and back-of-head stages on precomputed AM/FM planes.

    Stage failures become abstentions on the report; they never abort the frame.
    """
    rgb = as_rgb(rgb)
    report = FrameReport(frame=frame_id, timings=timings if timings is not None else {})
    with timed(report.timings, "faces"):
        _face_stage(report, rgb, fm, model, cfg)
    with timed(report.timings, "back_of_head"):
        _head_stage(report, rgb, am, fm, cfg)
    return report


def analyze_frame(img, model, cfg, bank, frame_id="", threads=1):
    """Full pipeline for one frame: demodulation, DCA, then analyze_planes."""
    timings = {}
    if img.width < cfg.block_size or img.height < cfg.block_size:
        reason = f"frame {img.width}x{img.height} is smaller than the {cfg.block_size}x{cfg.block_size} block"
        logger.warning(f"{frame_id}: {reason}")
        return FrameReport(frame=frame_id, abstentions=[Abstention(stage="frame", reason=reason)])
    try:
        with timed(timings, "demodulation"):
            am, fm, _, _ = amfm.amfm_images(img, bank, cfg.selection, threads)
    except DegenerateInputError as e:
        return FrameReport(frame=frame_id, abstentions=[Abstention(stage="frame", reason=str(e))], timings=timings)
    report = analyze_planes(img, am, fm, model, cfg, frame_id, timings)
    logger.info(
        f"{frame_id}: {len(report.detections)} detection(s), {len(report.abstentions)} abstention(s), "
        + ", ".join(f"{k} {v:.2f}s" for k, v in report.timings.items())
    )
    return report


def evaluate_directions(samples, cfg):
    """Per-class accuracy of the face-direction classifier on labeled FM face blocks.

    `samples` holds (GrayImage, Direction) pairs. The result also carries the
    (left, right) count pairs of each patch classifier for scatter plots
    against the y = x line.
    """
    tally = {d.value: {"correct": 0, "total": 0} for d in Direction}
    points = {"upper": [], "lower": [], "whole": []}
    abstained = 0
    for block, truth in samples:
        truth = Direction(truth)
        try:
            counts, _ = patch_counts(block, cfg.top_rows)
        except DegenerateInputError:
            abstained += 1
            continue
        predicted, _ = face_direction(counts, cfg.classifier)
        tally[truth.value]["total"] += 1
        tally[truth.value]["correct"] += int(predicted is truth)
        points["upper"].append((counts.ul, counts.ur, truth.value))
        points["lower"].append((counts.ll, counts.lr, truth.value))
        points["whole"].append((counts.ul + counts.ll, counts.ur + counts.lr, truth.value))
    for entry in tally.values():
        entry["accuracy"] = entry["correct"] / entry["total"] if entry["total"] else None
    return {"classes": tally, "abstained": abstained, "points": points}


def evaluate_away_directions(samples, cfg, bank, threads=1):
    """Per-class accuracy of the away-facing rule on frames labeled left or right.

    `samples` yields (frame_id, image, Direction). Only demodulation and the
    back-of-head stage run. A frame whose head gets no direction counts as
    abstained and is listed with the reasons.
    """
    tally = {d.value: {"correct": 0, "total": 0} for d in Direction}
    frames = []
    abstained = 0
    for frame_id, img, truth in samples:
        truth = Direction(truth)
        report = FrameReport(frame=frame_id)
        try:
            am, fm, _, _ = amfm.amfm_images(img, bank, cfg.selection, threads)
        except DegenerateInputError as e:
            report.abstentions.append(Abstention(stage="frame", reason=str(e)))
        else:
            _head_stage(report, as_rgb(img), am, fm, cfg)
        heads = [d for d in report.detections if d.kind is Kind.BACK_OF_HEAD and d.direction is not None]
        if not heads:
            abstained += 1
            reason = "; ".join(a.reason for a in report.abstentions)
            frames.append({"frame": frame_id, "truth": truth.value, "predicted": None, "reason": reason})
            logger.info(f"{frame_id}: no away direction ({reason})")
            continue
        predicted = heads[0].direction
        tally[truth.value]["total"] += 1
        tally[truth.value]["correct"] += int(predicted is truth)
        frames.append({"frame": frame_id, "truth": truth.value, "predicted": predicted.value})
    for entry in tally.values():
        entry["accuracy"] = entry["correct"] / entry["total"] if entry["total"] else None
    return {"classes": tally, "abstained": abstained, "frames": frames}
