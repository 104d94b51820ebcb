"""Foul-centred frame sampling.

The window convention: for `frames_per_clip = 2k`, take source indices
[foul - k, foul + k), i.e. k frames strictly before the foul frame and k
frames starting at it. Windows that run off either end are edge-padded by
repeating the first/last frame, so the output length is always exactly
`frames_per_clip`.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..model.types import VideoClip
from .media import read_frames
from .records import ClipRecord


class FrameIndexError(ValueError):
    """foul_frame_index lies outside the source media."""


def window_indices(foul_frame_index: int, n_frames: int, frames_per_clip: int) -> np.ndarray:
    if frames_per_clip < 2 or frames_per_clip % 2 != 0:
        raise ValueError(f"frames_per_clip must be a positive even number, got {frames_per_clip}")
    if not (0 <= foul_frame_index < n_frames):
        raise FrameIndexError(
            f"foul_frame_index {foul_frame_index} out of bounds for media with {n_frames} frames"
        )
    half = frames_per_clip // 2
    raw = np.arange(foul_frame_index - half, foul_frame_index + half)
    return np.clip(raw, 0, n_frames - 1)


def sample_frames(
    clip: ClipRecord, frames_per_clip: int = 16, media_root: Path = Path("."), fps: float = 25.0
) -> VideoClip:
    frames = read_frames(Path(media_root) / clip.media)
    idx = window_indices(clip.foul_frame_index, frames.shape[0], frames_per_clip)
    return VideoClip(
        frames=frames[idx],
        clip_id=clip.clip_id,
        foul_frame_index=clip.foul_frame_index,
        fps=fps,
    )
