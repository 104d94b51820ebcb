"""Clip media readers behind a single interface.

Two storage layouts are supported:
  - a `.npy` file holding a T x H x W x 3 array (float in [0,1] or uint8), or
  - a directory of numbered image frames (`frame_0000.png`, ...).

`read_frames` returns float64 frames normalized to [0,1] either way.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class MediaError(IOError):
    pass


def read_frames(path: Path) -> np.ndarray:
    path = Path(path)
    if path.is_dir():
        return _read_frame_dir(path)
    if path.suffix == ".npy":
        return _read_npy(path)
    raise MediaError(f"unsupported media path (expected .npy file or frame directory): {path}")


def _normalize(frames: np.ndarray, origin: Path) -> np.ndarray:
    if frames.ndim != 4 or frames.shape[-1] != 3:
        raise MediaError(f"media {origin} must be T x H x W x 3, got shape {frames.shape}")
    if frames.dtype == np.uint8:
        return frames.astype(np.float64) / 255.0
    frames = frames.astype(np.float64)
    if not np.isfinite(frames).all() or frames.min() < 0.0 or frames.max() > 1.0:
        raise MediaError(f"media {origin} has float values outside [0,1]")
    return frames


def _read_npy(path: Path) -> np.ndarray:
    if not path.exists():
        raise MediaError(f"media file not found: {path}")
    try:
        frames = np.load(path)
    except Exception as exc:
        raise MediaError(f"cannot read media file {path}: {exc}") from exc
    return _normalize(frames, path)


def _read_frame_dir(path: Path) -> np.ndarray:
    from PIL import Image

    files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
    if not files:
        raise MediaError(f"no image frames found in {path}")
    frames = []
    for f in files:
        with Image.open(f) as img:
            frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8))
    stacked = np.stack(frames)
    return _normalize(stacked, path)


def write_npy_clip(path: Path, frames: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, frames.astype(np.float32))
    return path
