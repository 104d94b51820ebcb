"""Synthetic desk-scale dataset with labels that are a function of pixel patterns.

Each clip is noise plus two injected bright bands: a column band in the top
half of the frame encodes the foul type (8 positions) and a column band in
the bottom half encodes the severity (4 positions). Labels are therefore a
deterministic, linearly separable function of the pixels, which is what lets
a tiny encoder reach high held-out accuracy in seconds.

Answers are fixed referee-style templates conditioned on the severity label,
chosen so the rule-based extractor maps each template back to its severity.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..labels import FoulType, Severity
from .manifest import write_manifest
from .media import write_npy_clip
from .records import ClipRecord, VqaTriplet
from .splits import apply_split, split_dataset

ANSWER_TEMPLATES: Dict[Severity, str] = {
    Severity.NO_OFFENCE: "No foul, this is a fair challenge by the defender.",
    Severity.OFFENCE_NO_CARD: "Foul by the defender, but no card is needed.",
    Severity.OFFENCE_YELLOW_CARD: "Foul, clear yellow card for a reckless challenge.",
    Severity.OFFENCE_RED_CARD: "Foul, straight red card for serious foul play.",
}

QUESTIONS = (
    "Is it a foul or not? Why?",
    "What card would you give? Why?",
)

LANGUAGES = ("en", "de", "fr", "es")


def pattern_frames(
    foul: FoulType, severity: Severity, n_frames: int, height: int, width: int, rng: np.random.Generator
) -> np.ndarray:
    """Noise background with one foul-type band (top half) and one severity band (bottom half)."""
    frames = rng.uniform(0.05, 0.25, size=(n_frames, height, width, 3))
    type_w = max(width // 8, 1)
    sev_w = max(width // 4, 1)
    t0 = int(foul) * type_w
    s0 = int(severity) * sev_w
    frames[:, : height // 2, t0 : t0 + type_w, :] = 0.95
    frames[:, height // 2 :, s0 : s0 + sev_w, :] = 0.85
    return np.clip(frames, 0.0, 1.0)


@dataclass
class SyntheticDataset:
    clips: List[ClipRecord]
    triplets: List[VqaTriplet]
    media: Dict[str, np.ndarray]    # clip_id -> full source frames (pre-sampling)
    manifest_path: Optional[Path] = None

    def split_clips(self, side: str) -> List[ClipRecord]:
        return [c for c in self.clips if c.split == side]


def build_synthetic_dataset(
    n_clips: int = 256,
    frames_per_clip: int = 8,
    frame_size: int = 16,
    seed: int = 0,
    train_fraction: float = 0.8,
    media_dir: str = "media",
) -> SyntheticDataset:
    """Balanced clips over all 8 x 4 label combinations, deterministic per seed."""
    rng = np.random.default_rng(seed)
    pick = random.Random(seed + 1)
    media_frames = frames_per_clip + 8
    clips: List[ClipRecord] = []
    media: Dict[str, np.ndarray] = {}
    triplets: List[VqaTriplet] = []
    annotators = [f"ref_{i:02d}" for i in range(16)]
    games = {a: pick.randint(140, 2279) for a in annotators}

    combos = [(f, s) for f in FoulType for s in Severity]
    for i in range(n_clips):
        foul, severity = combos[i % len(combos)]
        clip_id = f"clip_{i:04d}"
        frames = pattern_frames(foul, severity, media_frames, frame_size, frame_size, rng)
        foul_frame = media_frames // 2 + pick.randint(-2, 2)
        clips.append(ClipRecord(
            clip_id=clip_id,
            media=f"{media_dir}/{clip_id}.npy",
            foul_frame_index=foul_frame,
            gt_foul=foul,
            gt_severity=severity,
        ))
        media[clip_id] = frames
        question = pick.choice(QUESTIONS)
        answer = ANSWER_TEMPLATES[severity]
        first = pick.choice(annotators)
        triplets.append(VqaTriplet(
            clip_id=clip_id, question=question, answer=answer, annotator_id=first,
            games_officiated=games[first], original_language=pick.choice(LANGUAGES),
        ))
        if pick.random() < 0.5:
            second = pick.choice([a for a in annotators if a != first])
            triplets.append(VqaTriplet(
                clip_id=clip_id, question=question, answer=answer, annotator_id=second,
                games_officiated=games[second], original_language=pick.choice(LANGUAGES),
            ))

    spec = split_dataset(clips, train_fraction, seed)
    clips = apply_split(clips, spec)
    return SyntheticDataset(clips=clips, triplets=triplets, media=media)


def materialize(dataset: SyntheticDataset, root: Path) -> Path:
    """Write media blobs and the manifest under `root`; returns the manifest path."""
    root = Path(root)
    for clip in dataset.clips:
        write_npy_clip(root / clip.media, dataset.media[clip.clip_id])
    manifest_path = write_manifest(root / "manifest.csv", dataset.clips, dataset.triplets)
    dataset.manifest_path = manifest_path
    return manifest_path


def generate_synthetic_dataset(
    root: Path,
    n_clips: int = 256,
    frames_per_clip: int = 8,
    frame_size: int = 16,
    seed: int = 0,
    train_fraction: float = 0.8,
) -> Path:
    ds = build_synthetic_dataset(
        n_clips=n_clips, frames_per_clip=frames_per_clip, frame_size=frame_size,
        seed=seed, train_fraction=train_fraction,
    )
    return materialize(ds, root)
