"""Acceptance checks on phantoms: each reports a measured value against its tolerance."""
import math
import time
import logging

import numpy as np

from models.configModel import PipelineConfig
from models.detectionModel import Direction, Kind
from models.fieldModel import AmFmField
from models.imageModel import BinaryImage, GrayImage
from . import amfm, attention, detect, gaborbank, phantoms

logger = logging.getLogger(__name__)

WAVE_SIZE = 256
WAVE_COUNT = 20
SEED = 7


def _check(name, measured, tolerance, passed, seconds):
    return {
        "name": name,
        "measured": measured,
        "tolerance": tolerance,
        "passed": bool(passed),
        "seconds": round(seconds, 3),
    }


def check_filterbank():
    start = time.perf_counter()
    bank = gaborbank.build_filterbank()
    sizes = list(bank.group_sizes().values())
    ok = len(bank) == 54 and sizes == [24, 20, 8, 2] and all(abs(f.u) <= math.pi and abs(f.v) <= math.pi for f in bank)
    return _check("filterbank layout", f"{len(bank)} filters {sizes}", "54 filters [24, 20, 8, 2]", ok,
                  time.perf_counter() - start)


def check_overlap(bank):
    start = time.perf_counter()
    levels = [r["level"] for r in gaborbank.overlap_levels(bank)]
    lo, hi = min(levels), max(levels)
    return _check("filter overlap", f"crossings {lo:.3f}..{hi:.3f}", "within 0.55..0.95",
                  0.55 <= lo and hi <= 0.95, time.perf_counter() - start)


def check_analytic():
    start = time.perf_counter()
    wave, u, _ = phantoms.plane_wave(64, 0.7, 0.0)
    asig = amfm.analytic_image(wave)
    y, x = np.mgrid[0:64, 0:64]
    error = float(np.max(np.abs(asig.values.imag - np.sin(u * x))))
    return _check("analytic quadrature", f"{error:.2e}", "< 1e-9", error < 1e-9, time.perf_counter() - start)


def _eligible(bank, size):
    step = 2 * math.pi / size
    return [i for i, f in enumerate(bank) if f.sigma <= 7 and f.passband_center[0] >= 4 * step]


def check_plane_waves(bank, size=WAVE_SIZE, count=WAVE_COUNT):
    """Worst interior IA and frequency error over plane waves at filter centers."""
    start = time.perf_counter()
    rng = np.random.default_rng(SEED)
    chosen = rng.choice(_eligible(bank, size), size=count, replace=False)
    worst_ia = worst_freq = 0.0
    for index in sorted(int(i) for i in chosen):
        f = bank[index]
        wave, u, v = phantoms.plane_wave(size, *f.passband_center)
        channel = amfm.demodulate_channel(amfm.analytic_image(wave), f, index)
        m = 2 * f.radius + 2
        field = AmFmField(
            dominant_ia=channel.ia, dominant_ip=channel.ip,
            dominant_channel=np.full(channel.shape, index), n_channels=1,
        )
        fx, fy = amfm.instantaneous_frequency(field)
        ia_err = float(np.max(np.abs(channel.ia[m:-m, m:-m] - 1.0)))
        freq_err = float(np.max(np.hypot(fx[m:-m, m:-m] - u, fy[m:-m, m:-m] - v)) / math.hypot(u, v))
        worst_ia, worst_freq = max(worst_ia, ia_err), max(worst_freq, freq_err)
    ok = worst_ia < 0.02 and worst_freq < 0.02
    return _check("plane-wave demodulation", f"IA {worst_ia:.4f}, frequency {worst_freq:.4f}", "< 0.02 each",
                  ok, time.perf_counter() - start)


def check_reconstruction(bank, size=WAVE_SIZE, margin=40):
    start = time.perf_counter()
    target = next(f for f in bank if f.scale_group == 1 and f.sigma == 4 and f.u > 0)
    img, envelope, phase = phantoms.am_fm_wave(size, *target.passband_center)
    field, _ = amfm.demodulate_filterbank(amfm.analytic_image(img), bank)
    rebuilt = amfm.reconstruct(field).pixels
    inner = (slice(margin, -margin), slice(margin, -margin))
    truth = img.pixels[inner]
    rms = float(np.sqrt(np.mean((rebuilt[inner] - truth) ** 2)) / np.sqrt(np.mean(truth ** 2)))
    return _check("AM-FM reconstruction", f"relative RMS {rms:.4f}", "< 0.10", rms < 0.10,
                  time.perf_counter() - start)


def check_face_direction(cfg, bank):
    """Face phantom and its mirror through demodulation, KNN and the patch rule."""
    start = time.perf_counter()
    verdicts = []
    for mirror in (False, True):
        rgb = phantoms.face_frame(mirror)
        am, fm, _, _ = amfm.amfm_images(rgb, bank, cfg.selection, cfg.threads)
        model = phantoms.face_model(fm, cfg.block_size, cfg.stride, cfg.knn_k)
        report = attention.analyze_planes(rgb, am, fm, model, cfg, "face")
        faces = [d for d in report.detections if d.kind is Kind.FACE]
        verdicts.append(faces[0].direction.value if len(faces) == 1 and faces[0].direction else "none")
    ok = verdicts == [Direction.LEFT.value, Direction.RIGHT.value]
    return _check("face phantom direction", "/".join(verdicts), "left/right", ok, time.perf_counter() - start)


def check_back_of_head(cfg, bank):
    """Head phantom and its mirror through the full frame pipeline."""
    start = time.perf_counter()
    offsets, verdicts = [], []
    model = phantoms.nonface_model(cfg.block_size, cfg.knn_k)
    for mirror in (False, True):
        report = attention.analyze_frame(phantoms.head_frame(mirror=mirror), model, cfg, bank, "head", cfg.threads)
        heads = [d for d in report.detections if d.kind is Kind.BACK_OF_HEAD]
        if len(heads) != 1:
            offsets.append(float("inf"))
            verdicts.append("none")
            continue
        cx, cy = phantoms.head_center(mirror=mirror)
        offsets.append(math.hypot(heads[0].box.center[0] - cx, heads[0].box.center[1] - cy))
        verdicts.append(heads[0].direction.value if heads[0].direction else "none")
    worst = max(offsets)
    ok = worst < 20 and verdicts == [Direction.RIGHT.value, Direction.LEFT.value]
    return _check("back-of-head phantom", f"center offset {worst:.1f} px, away {'/'.join(verdicts)}",
                  "< 20 px, right/left", ok, time.perf_counter() - start)


def check_density_speed():
    rng = np.random.default_rng(SEED)
    img = BinaryImage(rng.random((480, 640)) < 0.2)
    start = time.perf_counter()
    detect.highest_dot_density_area(img, 200)
    seconds = time.perf_counter() - start
    return _check("density scan 640x480", f"{seconds * 1000:.1f} ms", "< 50 ms", seconds < 0.05, seconds)


def check_demodulation_speed(bank, threads=0):
    rng = np.random.default_rng(SEED)
    frame = GrayImage(rng.random((480, 640)) * 255)
    start = time.perf_counter()
    amfm.amfm_images(frame, bank, threads=threads)
    seconds = time.perf_counter() - start
    return _check("54-channel demodulation 640x480", f"{seconds:.2f} s", "< 5 s", seconds < 5, seconds)


def run_all(cfg=None):
    """Every acceptance check in order; each result is a dict with name, measured, tolerance, passed, seconds."""
    cfg = cfg or PipelineConfig()
    results = [check_filterbank()]
    bank = gaborbank.build_filterbank(cfg.filter_params)
    results.append(check_overlap(bank))
    results.append(check_analytic())
    results.append(check_plane_waves(bank))
    results.append(check_reconstruction(bank))
    results.append(check_face_direction(cfg, bank))
    results.append(check_back_of_head(cfg, bank))
    results.append(check_density_speed())
    results.append(check_demodulation_speed(bank, cfg.threads))
    failed = [r["name"] for r in results if not r["passed"]]
    if failed:
        logger.warning(f"Failed checks: {', '.join(failed)}")
    return results
