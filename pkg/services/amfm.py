"""Analytic image, per-channel demodulation and dominant component analysis."""
import math
import os
import logging

import numpy as np
from scipy import fft as sfft

from models.baseModel import AttentionError, DegenerateInputError, PnmError
from models.imageModel import GrayImage, RgbImage
from models.fieldModel import AnalyticImage, ChannelField, AmFmField
from utils import ordered_map
from . import imgcore

logger = logging.getLogger(__name__)

MIN_SIDE = 8
# relative IA spread below which the AM plane counts as flat (FFT round-off)
FLAT_TOLERANCE = 1e-9


def _wrap(phase):
    """Wrap to (-pi, pi]."""
    wrapped = np.angle(np.exp(1j * phase))
    wrapped[wrapped <= -math.pi] = math.pi
    return wrapped


def analytic_image(img):
    """I + jH[I] with H the Hilbert transform along x (columns).

    Realized as a -j*sign(u) multiplier over the 2-D DFT with the DC and
    Nyquist columns zeroed; the real part is the input itself.
    """
    pixels = img.pixels
    height, width = pixels.shape
    if height < MIN_SIDE or width < MIN_SIDE:
        raise DegenerateInputError(f"image {width}x{height} is smaller than {MIN_SIDE}x{MIN_SIDE}")
    multiplier = -1j * np.sign(sfft.fftfreq(width))
    if width % 2 == 0:
        multiplier[width // 2] = 0
    spectrum = sfft.fft2(pixels) * multiplier[np.newaxis, :]
    hilbert = sfft.ifft2(spectrum).real
    return AnalyticImage(pixels + 1j * hilbert)


class _Convolver:
    """Mirror-padded image held in the DFT domain, reused by every channel."""

    def __init__(self, asig, pad):
        self.height, self.width = asig.values.shape
        self.pad = pad
        padded = np.pad(asig.values, pad, mode="symmetric")
        self.shape = tuple(sfft.next_fast_len(s) for s in padded.shape)
        self.spectrum = sfft.fft2(padded, s=self.shape)

    def apply(self, kernel):
        radius = kernel.shape[0] // 2
        taps = np.zeros(self.shape, dtype=np.complex128)
        side = kernel.shape[0]
        taps[:side, :side] = kernel
        taps = np.roll(taps, (-radius, -radius), axis=(0, 1))
        out = sfft.ifft2(self.spectrum * sfft.fft2(taps))
        p = self.pad
        return out[p:p + self.height, p:p + self.width]


def _channel_from_response(response, index):
    ia = np.abs(response)
    ip = np.where(ia > 0, np.angle(response), 0.0)
    ip[ip <= -math.pi] = math.pi
    return ChannelField(ia=ia, ip=ip, channel_index=index)


def demodulate_channel(asig, f, index=0, convolver=None):
    """IA and IP of one channel: convolve the analytic image with the filter.

    The filter is applied through `analytic_kernel`, so filters centred at
    u < 0 act through their reflection into the half-plane the analytic image
    occupies. Borders use symmetric extension.
    """
    kernel = f.analytic_kernel
    if asig.height < kernel.shape[0] or asig.width < kernel.shape[1]:
        raise DegenerateInputError(
            f"image {asig.width}x{asig.height} is smaller than the {kernel.shape[0]}x{kernel.shape[1]} kernel"
        )
    if convolver is None:
        convolver = _Convolver(asig, f.radius)
    return _channel_from_response(convolver.apply(kernel), index)


def dominant_components(channels, selection="all", scale_groups=None):
    """Per pixel, the channel with the largest IA (lowest channel index wins ties).

    `selection` is 'all' or a scale group; `scale_groups[i]` gives the group of
    channels[i] and is required when selecting a group.
    """
    if not channels:
        raise ValueError("dominant_components needs at least one channel")
    shape = channels[0].shape
    if any(ch.shape != shape for ch in channels):
        raise ValueError("all channels must have the same dimensions")
    if selection == "all":
        chosen = list(channels)
    else:
        if scale_groups is None:
            raise ValueError("scale_groups is required to select a scale group")
        chosen = [ch for ch, g in zip(channels, scale_groups) if g == int(selection)]
        if not chosen:
            raise ValueError(f"no channels in scale group {selection}")

    reducer = _DominantReducer(shape)
    for ch in sorted(chosen, key=lambda ch: ch.channel_index):
        reducer.add(ch)
    return reducer.field(n_channels=len(channels))


class _DominantReducer:
    """Running max over channels fed in index order."""

    def __init__(self, shape):
        self.ia = np.full(shape, -1.0)
        self.ip = np.zeros(shape)
        self.channel = np.zeros(shape, dtype=np.int64)

    def add(self, ch):
        better = ch.ia > self.ia
        self.ia[better] = ch.ia[better]
        self.ip[better] = ch.ip[better]
        self.channel[better] = ch.channel_index

    def field(self, n_channels):
        return AmFmField(
            dominant_ia=self.ia, dominant_ip=self.ip,
            dominant_channel=self.channel, n_channels=n_channels,
        )


def demodulate_filterbank(asig, bank, selection="all", threads=1, keep_channels=False):
    """Demodulate every selected channel and reduce them to the dominant field.

    One forward FFT of the padded image serves all channels; channels run on a
    bounded pool and are reduced in index order, so the result does not depend
    on the thread count. Returns (field, channels) where channels is empty
    unless keep_channels is set.
    """
    indices = bank.indices(selection)
    if not indices:
        raise AttentionError(f"no filters in scale group {selection}")
    radius = bank.max_radius(selection)
    side = 2 * radius + 1
    if asig.height < side or asig.width < side:
        raise DegenerateInputError(
            f"image {asig.width}x{asig.height} is smaller than the largest {side}x{side} kernel"
        )
    convolver = _Convolver(asig, radius)
    reducer = _DominantReducer(asig.values.shape)
    kept = []
    work = lambda i: demodulate_channel(asig, bank[i], index=i, convolver=convolver)
    for ch in ordered_map(work, indices, threads):
        reducer.add(ch)
        if keep_channels:
            kept.append(ch)
    logger.debug(f"Demodulated {len(indices)} channels ({selection}) on {asig.width}x{asig.height}")
    return reducer.field(n_channels=len(bank)), kept


def fm_image(field):
    """cos(dominant IP) mapped from [-1, 1] to [0, 255]."""
    return GrayImage((np.cos(field.dominant_ip) + 1.0) * 127.5)


def am_image(field):
    """Dominant IA stretched to [0, 255]; a flat field maps to 0."""
    ia = field.dominant_ia
    lo, hi = ia.min(), ia.max()
    if hi - lo <= FLAT_TOLERANCE * max(abs(hi), 1.0):
        return GrayImage(np.zeros_like(ia))
    return GrayImage((ia - lo) * (255.0 / (hi - lo)))


def reconstruct(field):
    """Single-component reconstruction A cos(phi) of the dominant field."""
    return GrayImage(field.dominant_ia * np.cos(field.dominant_ip))


def instantaneous_frequency(field):
    """(fx, fy) in rad/sample from wrapped forward differences of the dominant IP."""
    ip = field.dominant_ip
    fx = np.empty_like(ip)
    fy = np.empty_like(ip)
    fx[:, :-1] = _wrap(np.diff(ip, axis=1))
    fx[:, -1] = fx[:, -2]
    fy[:-1, :] = _wrap(np.diff(ip, axis=0))
    fy[-1, :] = fy[-2, :]
    return fx, fy


def dump_channels(channels, out_dir):
    """Write ch<NN>_ia.pgm (stretched) and ch<NN>_ip.pgm ((-pi, pi] -> [0, 255]) per channel."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise PnmError(f"cannot create {out_dir}: {e}") from None
    for ch in channels:
        single = AmFmField(
            dominant_ia=ch.ia, dominant_ip=ch.ip,
            dominant_channel=np.full(ch.shape, ch.channel_index), n_channels=1,
        )
        imgcore.save_pnm(am_image(single), os.path.join(out_dir, f"ch{ch.channel_index:02d}_ia.pgm"))
        ip = GrayImage((ch.ip + math.pi) * (255.0 / (2 * math.pi)))
        imgcore.save_pnm(ip, os.path.join(out_dir, f"ch{ch.channel_index:02d}_ip.pgm"))
    logger.info(f"Dumped {len(channels)} channel(s) to {out_dir}")


def amfm_images(img, bank, selection="all", threads=1, keep_channels=False):
    """gray -> analytic -> demodulation -> DCA -> (am, fm, field, channels)."""
    gray = imgcore.to_gray(img) if isinstance(img, RgbImage) else img
    asig = analytic_image(gray)
    field, channels = demodulate_filterbank(asig, bank, selection, threads, keep_channels)
    return am_image(field), fm_image(field), field, channels
