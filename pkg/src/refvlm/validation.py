"""Input validation helpers shared across the package.

Array arguments throughout the package may be either numpy arrays or torch
tensors; the helpers here dispatch on the concrete type so that the same
public operations can sit inside an autograd graph (torch inputs) or be used
as plain reference functions (numpy inputs).
"""

from __future__ import annotations

import numpy as np
import torch


class ShapeError(ValueError):
    """An array argument has the wrong rank or incompatible dimensions."""


class NonFiniteError(ValueError):
    """An array argument or computed result contains NaN or Inf."""


def is_tensor(x) -> bool:
    return isinstance(x, torch.Tensor)


def all_finite(x) -> bool:
    if is_tensor(x):
        return bool(torch.isfinite(x).all())
    return bool(np.isfinite(x).all())


def check_finite(x, what: str):
    if not all_finite(x):
        raise NonFiniteError(f"{what} contains non-finite values")
    return x


def check_rank(x, rank: int, what: str):
    if x.ndim != rank:
        raise ShapeError(f"{what} must have rank {rank}, got shape {tuple(x.shape)}")
    return x


def to_numpy(x) -> np.ndarray:
    """Detach to a numpy array (no copy when already numpy)."""
    if is_tensor(x):
        return x.detach().cpu().numpy()
    return np.asarray(x)


def concat_rows(a, b):
    """Stack two rank-2 arrays along axis 0, preserving the backend."""
    if is_tensor(a) or is_tensor(b):
        return torch.cat((torch.as_tensor(a), torch.as_tensor(b)), dim=0)
    return np.concatenate((a, b), axis=0)


def check_frames(frames, what: str = "frames"):
    """Validate a T x H x W x C frame array: C=3, finite, values in [0, 1]."""
    check_rank(frames, 4, what)
    t, h, w, c = frames.shape
    if t < 1:
        raise ShapeError(f"{what} must contain at least one frame")
    if c != 3:
        raise ShapeError(f"{what} must have 3 channels, got {c}")
    check_finite(frames, what)
    arr = to_numpy(frames)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{what} values must lie in [0, 1]")
    return frames
