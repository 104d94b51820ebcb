"""Glue from dataset records to training examples."""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence

from ..training.stage1 import LabeledClip, MissingLabelError
from ..training.stage2 import Stage2Example
from .records import ClipRecord, VqaTriplet
from .sampling import sample_frames


def labeled_clips(
    records: Sequence[ClipRecord],
    media_root: Path,
    frames_per_clip: int = 16,
    split: Optional[str] = None,
) -> List[LabeledClip]:
    out = []
    for rec in records:
        if split is not None and rec.split != split:
            continue
        if rec.gt_foul is None or rec.gt_severity is None:
            raise MissingLabelError(f"clip {rec.clip_id!r} has no ground-truth labels")
        clip = sample_frames(rec, frames_per_clip=frames_per_clip, media_root=media_root)
        out.append(LabeledClip(clip=clip, foul=rec.gt_foul, severity=rec.gt_severity))
    return out


def stage2_examples(
    records: Sequence[ClipRecord],
    triplets: Sequence[VqaTriplet],
    media_root: Path,
    frames_per_clip: int = 16,
    split: Optional[str] = None,
) -> List[Stage2Example]:
    by_id = {c.clip_id: c for c in records}
    clip_cache = {}
    out = []
    for t in triplets:
        rec = by_id.get(t.clip_id)
        if rec is None:
            continue
        if split is not None and rec.split != split:
            continue
        if rec.gt_foul is None or rec.gt_severity is None:
            raise MissingLabelError(f"clip {rec.clip_id!r} has no ground-truth labels")
        if rec.clip_id not in clip_cache:
            clip_cache[rec.clip_id] = sample_frames(rec, frames_per_clip=frames_per_clip, media_root=media_root)
        out.append(Stage2Example(
            clip=clip_cache[rec.clip_id],
            question=t.question,
            answer=t.answer,
            gt_foul=rec.gt_foul,
            gt_severity=rec.gt_severity,
        ))
    return out
