"""Clip-level train/test splitting.

Splitting happens at the clip level so that all triplets of a clip land on
the same side; with ~1.5 answers per action, splitting at the triplet level
would leak near-duplicate answers across the boundary.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import FrozenSet, List, Sequence

from .records import ClipRecord


class DegenerateSplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    train_ids: FrozenSet[str]
    test_ids: FrozenSet[str]
    fraction: float
    seed: int


def split_dataset(clips: Sequence[ClipRecord], fraction: float, seed: int) -> SplitSpec:
    """Deterministically partition clips into train/test by seeded shuffle."""
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must lie strictly between 0 and 1, got {fraction}")
    ids = sorted(c.clip_id for c in clips)
    if len(ids) != len(set(ids)):
        raise ValueError("duplicate clip ids in split input")
    rng = random.Random(seed)
    rng.shuffle(ids)
    n_train = int(len(ids) * fraction)
    train, test = ids[:n_train], ids[n_train:]
    if not train or not test:
        raise DegenerateSplitError(
            f"fraction {fraction} over {len(ids)} clips leaves an empty side ({len(train)}/{len(test)})"
        )
    return SplitSpec(train_ids=frozenset(train), test_ids=frozenset(test), fraction=fraction, seed=seed)


def apply_split(clips: Sequence[ClipRecord], spec: SplitSpec) -> List[ClipRecord]:
    out = []
    for c in clips:
        if c.clip_id in spec.train_ids:
            side = "train"
        elif c.clip_id in spec.test_ids:
            side = "test"
        else:
            raise KeyError(f"clip {c.clip_id!r} is not covered by the split")
        out.append(ClipRecord(
            clip_id=c.clip_id, media=c.media, foul_frame_index=c.foul_frame_index,
            gt_foul=c.gt_foul, gt_severity=c.gt_severity, split=side,
        ))
    return out
