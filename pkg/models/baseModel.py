import numpy as np


class AttentionError(ValueError):
    """Base error for the pipeline. `exit_code` is what the CLI returns."""
    exit_code = 1


class PnmError(AttentionError):
    exit_code = 2


class ModelFileError(AttentionError):
    exit_code = 3


class DegenerateInputError(AttentionError):
    """Raised when a stage has nothing to work on; callers record an abstention."""
    exit_code = 4


def validate_plane(name, pixels, ndim=2):
    """Check shape and finiteness of a pixel plane, return it read-only."""
    pixels = np.asarray(pixels)
    if pixels.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got {pixels.ndim}")
    if pixels.shape[0] < 1 or pixels.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1")
    if np.issubdtype(pixels.dtype, np.inexact) and not np.all(np.isfinite(pixels)):
        raise ValueError(f"{name} contains NaN or Inf")
    pixels.setflags(write=False)
    return pixels
