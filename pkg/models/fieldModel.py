import math
from dataclasses import dataclass

import numpy as np

from .baseModel import validate_plane


@dataclass(frozen=True)
class AnalyticImage:
    """Input plane plus j times its Hilbert transform along x."""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", validate_plane("AnalyticImage", values))

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ChannelField:
    ia: np.ndarray
    ip: np.ndarray
    channel_index: int

    def __post_init__(self):
        ia = validate_plane("ia", np.array(self.ia, dtype=np.float64))
        ip = validate_plane("ip", np.array(self.ip, dtype=np.float64))
        if ia.shape != ip.shape:
            raise ValueError("ia and ip must have the same shape")
        if np.any(ia < 0):
            raise ValueError("ia must be non-negative")
        if np.any(ip <= -math.pi) or np.any(ip > math.pi):
            raise ValueError("ip must be wrapped to (-pi, pi]")
        object.__setattr__(self, "ia", ia)
        object.__setattr__(self, "ip", ip)

    @property
    def shape(self):
        return self.ia.shape


@dataclass(frozen=True)
class AmFmField:
    """Dominant-component planes; dominant_channel holds filterbank indices."""
    dominant_ia: np.ndarray
    dominant_ip: np.ndarray
    dominant_channel: np.ndarray
    n_channels: int

    def __post_init__(self):
        ia = validate_plane("dominant_ia", np.array(self.dominant_ia, dtype=np.float64))
        ip = validate_plane("dominant_ip", np.array(self.dominant_ip, dtype=np.float64))
        channel = validate_plane("dominant_channel", np.array(self.dominant_channel, dtype=np.int64))
        if not ia.shape == ip.shape == channel.shape:
            raise ValueError("AmFmField planes must share one shape")
        if self.n_channels < 1:
            raise ValueError("n_channels must be positive")
        object.__setattr__(self, "dominant_ia", ia)
        object.__setattr__(self, "dominant_ip", ip)
        object.__setattr__(self, "dominant_channel", channel)

    @property
    def shape(self):
        return self.dominant_ia.shape
