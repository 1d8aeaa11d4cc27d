import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GaborFilter:
    """One complex Gabor channel.

    L and F are in radians/sample, ang in degrees, theta in radians.
    `kernel` is unit-gain at (u, v); its side is 2*ceil(3*sigma)+1.
    """
    L: float
    ang: float
    sigma: float
    gamma: float
    F: float
    theta: float
    u: float
    v: float
    scale_group: int
    kernel: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("L must be positive")
        if not 0 <= self.ang < 360:
            raise ValueError("Ang must be in [0, 360)")
        if self.sigma < 1:
            raise ValueError("sigma must be at least 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if abs(self.u) > math.pi or abs(self.v) > math.pi:
            raise ValueError(f"center ({self.u}, {self.v}) lies outside the Nyquist square")
        side = 2 * math.ceil(3 * self.sigma) + 1
        if self.kernel.shape != (side, side):
            raise ValueError(f"kernel must be {side}x{side}")
        self.kernel.setflags(write=False)

    @property
    def radius(self):
        return self.kernel.shape[0] // 2

    @property
    def analytic_kernel(self):
        """Kernel pointed into the u >= 0 half-plane kept by the analytic image."""
        if self.u < 0:
            return np.conj(self.kernel)
        return self.kernel

    @property
    def passband_center(self):
        """(u, v) actually seen by `analytic_kernel`."""
        if self.u < 0:
            return (-self.u, -self.v)
        return (self.u, self.v)

    def to_dict(self):
        return {
            "L_over_pi": round(self.L / math.pi, 6),
            "ang": self.ang,
            "sigma": self.sigma,
            "gamma": self.gamma,
            "u": round(self.u, 6),
            "v": round(self.v, 6),
            "scale_group": self.scale_group,
            "kernel_side": int(self.kernel.shape[0]),
        }


@dataclass(frozen=True)
class Filterbank:
    filters: tuple
    gamma: float = 0.5

    def __post_init__(self):
        if not self.filters:
            raise ValueError("Filterbank needs at least one filter")
        seen = set()
        for f in self.filters:
            key = (round(f.L, 12), round(f.ang, 9))
            if key in seen:
                raise ValueError(f"Duplicate filter (L={f.L / math.pi:.3f}pi, Ang={f.ang})")
            seen.add(key)
        object.__setattr__(self, "filters", tuple(self.filters))

    def __len__(self):
        return len(self.filters)

    def __iter__(self):
        return iter(self.filters)

    def __getitem__(self, index):
        return self.filters[index]

    def max_radius(self, selection="all"):
        """Largest kernel radius among the selected filters."""
        return max(self.filters[i].radius for i in self.indices(selection))

    def group_sizes(self):
        sizes = {}
        for f in self.filters:
            sizes[f.scale_group] = sizes.get(f.scale_group, 0) + 1
        return dict(sorted(sizes.items()))

    def indices(self, selection="all"):
        """Channel indices for 'all' or one scale group."""
        if selection == "all":
            return list(range(len(self.filters)))
        return [i for i, f in enumerate(self.filters) if f.scale_group == int(selection)]
