"""Daisy-petal Gabor filterbank: kernels, the 54-filter layout and frequency responses."""
import math
import logging

import numpy as np
from scipy.optimize import brentq

from models.baseModel import AttentionError, PnmError
from models.filterModel import GaborFilter, Filterbank

logger = logging.getLogger(__name__)

GAMMA = 0.5
OVERLAP_DESIGN_LEVEL = 0.8
OVERLAP_FLAG_RANGE = (0.65, 0.95)

# (L / pi, sigma) pairs and angles in degrees, one entry per scale group
TABLE = (
    (((0.047, 11), (0.125, 6), (0.242, 4), (0.406, 3), (0.648, 2), (0.938, 2)),
     (20.25, 65.25, 110.25, 155.25)),
    (((0.102, 7), (0.195, 6), (0.313, 4), (0.461, 3), (0.695, 2)),
     (42.75, 87.75, 133.75, 177.75)),
    (((0.094, 3),),
     tuple(10 + k * 22.5 for k in range(8))),
    (((1.094, 2),),
     (43.5, 133.5)),
)


def center_frequency(L, ang):
    """(u, v, F, theta) of a filter at radial distance L (rad/sample) and angle `ang` degrees."""
    if L <= 0:
        raise ValueError("L must be positive")
    if not 0 <= ang < 360:
        raise ValueError("Ang must be in [0, 360)")
    u = L * math.cos(2 * math.pi * ang / 360)
    v = L * math.sin(2 * math.pi * ang / 360)
    return u, v, math.hypot(u, v), math.atan2(v, u)


def gabor_kernel(F, theta, sigma, gamma=GAMMA):
    """Sampled complex Gabor kernel on x, y in [-R, R], R = ceil(3 sigma).

    The carrier is exp(j F x') with F in radians/sample. Rows index y,
    columns index x.
    """
    if sigma < 1:
        raise ValueError("sigma must be at least 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not 0 < F <= math.pi * math.sqrt(2):
        raise ValueError("F must be in (0, pi*sqrt(2)]")
    radius = math.ceil(3 * sigma)
    y, x = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(np.float64)
    xr = x * math.cos(theta) + y * math.sin(theta)
    yr = -x * math.sin(theta) + y * math.cos(theta)
    envelope = np.exp(-((xr / gamma) ** 2 + yr ** 2) / (2 * sigma ** 2)) / (2 * math.pi * gamma * sigma ** 2)
    return envelope * np.exp(1j * F * xr)


def normalized_kernel(F, theta, sigma, gamma=GAMMA):
    """Kernel rescaled so that |DTFT| at its own center frequency is 1.

    At (u, v) the carrier cancels, so the gain is the envelope sum.
    """
    kernel = gabor_kernel(F, theta, sigma, gamma)
    return kernel / np.abs(kernel).sum()


def make_filter(L, ang, sigma, gamma=GAMMA, scale_group=0):
    u, v, F, theta = center_frequency(L, ang)
    return GaborFilter(
        L=L, ang=ang, sigma=sigma, gamma=gamma, F=F, theta=theta,
        u=u, v=v, scale_group=scale_group,
        kernel=normalized_kernel(F, theta, sigma, gamma),
    )


def load_filter_params(path):
    """Rows of (L/pi, Ang, sigma, gamma, scale_group) from a text file.

    Fields may be separated by commas or whitespace; '#' starts a comment.
    """
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise PnmError(f"cannot read filter parameters {path}: {e}") from None
    rows = []
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 5:
            raise AttentionError(f"{path}:{lineno}: expected 5 fields, got {len(fields)}")
        try:
            l_over_pi, ang, sigma, gamma = (float(f) for f in fields[:4])
            group = int(fields[4])
        except ValueError:
            raise AttentionError(f"{path}:{lineno}: non-numeric field") from None
        rows.append((l_over_pi, ang, sigma, gamma, group))
    if not rows:
        raise AttentionError(f"{path}: no filters defined")
    return rows


def table_rows():
    rows = []
    for group, (pairs, angles) in enumerate(TABLE):
        for l_over_pi, sigma in pairs:
            for ang in angles:
                rows.append((l_over_pi, ang, sigma, GAMMA, group))
    return rows


def build_filterbank(params_path=None):
    """The 54-filter bank, or the bank described by an override file.

    Rows that do not make a valid bank raise AttentionError naming the file.
    """
    rows = load_filter_params(params_path) if params_path else table_rows()
    try:
        filters = [
            make_filter(l_over_pi * math.pi, ang, sigma, gamma, group)
            for l_over_pi, ang, sigma, gamma, group in rows
        ]
        bank = Filterbank(filters=tuple(filters), gamma=GAMMA)
    except ValueError as e:
        raise AttentionError(f"{params_path or 'filter table'}: {e}") from None
    logger.info(f"Built filterbank with {len(bank)} filters, groups {bank.group_sizes()}")
    return bank


def _taps(f):
    radius = f.radius
    return np.arange(-radius, radius + 1, dtype=np.float64)


def frequency_response(f, u_q, v_q):
    """|DTFT| of the sampled kernel at (u_q, v_q); arrays broadcast pointwise."""
    u_q = np.asarray(u_q, dtype=np.float64)
    v_q = np.asarray(v_q, dtype=np.float64)
    taps = _taps(f)
    ex = np.exp(-1j * np.multiply.outer(u_q, taps))
    ey = np.exp(-1j * np.multiply.outer(v_q, taps))
    response = np.einsum("...y,yx,...x->...", ey, f.kernel, ex)
    return np.abs(response)


def grid_frequencies(n):
    """n samples of [-pi, pi)."""
    return -math.pi + 2 * math.pi * np.arange(n) / n


def response_grid(f, n=256):
    """|DTFT| on an n x n grid; rows index v, columns index u."""
    w = grid_frequencies(n)
    taps = _taps(f)
    ex = np.exp(-1j * np.outer(taps, w))
    ey = np.exp(-1j * np.outer(w, taps))
    return np.abs(ey @ f.kernel @ ex)


def bank_response(bank, n=256):
    """Per-frequency maximum of all normalized responses, the petal tiling picture."""
    total = np.zeros((n, n))
    for f in bank:
        np.maximum(total, response_grid(f, n), out=total)
    return total


def _ray_response(f, radius, ang):
    a = math.radians(ang)
    return float(frequency_response(f, radius * math.cos(a), radius * math.sin(a)))


def overlap_levels(bank):
    """Crossing level of each consecutive same-angle pair in scale groups 0 and 1.

    Returns dicts with the pair, crossing radius, level and a `flagged` bit for
    levels outside OVERLAP_FLAG_RANGE.
    """
    report = []
    for group in (0, 1):
        by_angle = {}
        for f in bank:
            if f.scale_group == group:
                by_angle.setdefault(f.ang, []).append(f)
        for ang, filters in sorted(by_angle.items()):
            filters.sort(key=lambda f: f.L)
            for inner, outer in zip(filters, filters[1:]):
                gap = lambda r: _ray_response(inner, r, ang) - _ray_response(outer, r, ang)
                radius = brentq(gap, inner.L, outer.L, xtol=1e-10)
                level = _ray_response(inner, radius, ang)
                lo, hi = OVERLAP_FLAG_RANGE
                flagged = not lo <= level <= hi
                report.append({
                    "group": group,
                    "ang": ang,
                    "L_inner": inner.L,
                    "L_outer": outer.L,
                    "radius": radius,
                    "level": level,
                    "flagged": flagged,
                })
                if flagged:
                    logger.warning(
                        f"Filters at {ang} deg (L={inner.L / math.pi:.3f}pi, {outer.L / math.pi:.3f}pi) "
                        f"cross at {level:.3f}, outside {lo}-{hi}"
                    )
    if report:
        mean = sum(r["level"] for r in report) / len(report)
        logger.info(f"Mean crossing level {mean:.3f} of peak (design value {OVERLAP_DESIGN_LEVEL})")
    return report
