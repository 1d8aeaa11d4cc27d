from dataclasses import dataclass

import numpy as np

FACE = "face"
NONFACE = "nonface"
LABELS = (FACE, NONFACE)


@dataclass(frozen=True)
class KnnModel:
    """Lazy nearest-neighbour learner over flattened 8-bit FM blocks."""
    k: int
    block_shape: tuple
    features: np.ndarray
    labels: tuple

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("k must be a positive odd number")
        features = np.array(self.features, dtype=np.uint8)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D array of flattened blocks")
        height, width = self.block_shape
        if features.shape[1] != height * width:
            raise ValueError(f"feature length {features.shape[1]} does not match block {height}x{width}")
        if len(self.labels) != features.shape[0]:
            raise ValueError("one label is needed per sample")
        invalid = set(self.labels) - set(LABELS)
        if invalid:
            raise ValueError(f"Unknown labels: {', '.join(sorted(invalid))}")
        if features.shape[0] < self.k:
            raise ValueError(f"KNN needs at least k={self.k} samples, got {features.shape[0]}")
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "block_shape", (int(height), int(width)))

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def vector_length(self):
        return self.features.shape[1]
