"""Dataset manifest loading and writing.

The manifest is a single UTF-8 CSV file: one header line, then one row per
question-answer triplet. Clip-level fields are carried on every row of the
clip and must agree across rows; clips are deduplicated by `clip_id`.

Columns (in order):
  clip_id, media, foul_frame_index, gt_foul, gt_severity, split,
  question, answer, annotator_id, games_officiated, original_language

`media` is a path relative to the manifest file. `gt_foul`, `gt_severity`,
`split`, `games_officiated`, and `original_language` may be empty. Free-text
cells are quoted per standard CSV rules.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Dict, List, Tuple

from ..labels import FoulType, Severity
from .records import ClipRecord, VqaTriplet

logger = logging.getLogger(__name__)

COLUMNS = (
    "clip_id",
    "media",
    "foul_frame_index",
    "gt_foul",
    "gt_severity",
    "split",
    "question",
    "answer",
    "annotator_id",
    "games_officiated",
    "original_language",
)


class SchemaError(ValueError):
    def __init__(self, row: int, message: str):
        super().__init__(f"manifest row {row}: {message}")
        self.row = row


class DanglingClipError(ValueError):
    pass


def load_dataset(manifest_path: Path) -> Tuple[List[ClipRecord], List[VqaTriplet]]:
    """Parse a manifest into clip records and triplets, validating referential integrity."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise FileNotFoundError(f"dataset manifest not found: {manifest_path}")

    clips: Dict[str, ClipRecord] = {}
    clip_first_row: Dict[str, int] = {}
    triplets: List[VqaTriplet] = []
    seen_keys = set()

    with manifest_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != COLUMNS:
            raise SchemaError(1, f"header must be {','.join(COLUMNS)}, got {reader.fieldnames}")
        for row_no, row in enumerate(reader, start=2):
            clip = _parse_clip(row, row_no)
            triplet = _parse_triplet(row, row_no)
            key = (triplet.clip_id, triplet.question, triplet.annotator_id)
            if key in seen_keys:
                raise SchemaError(row_no, f"duplicate (clip_id, question, annotator_id) row: {key}")
            seen_keys.add(key)
            if clip.clip_id in clips:
                _check_consistent(clips[clip.clip_id], clip, clip_first_row[clip.clip_id], row_no)
            else:
                clips[clip.clip_id] = clip
                clip_first_row[clip.clip_id] = row_no
            triplets.append(triplet)

    clip_list = list(clips.values())
    known = {c.clip_id for c in clip_list}
    for t in triplets:
        if t.clip_id not in known:
            raise DanglingClipError(f"triplet references unknown clip {t.clip_id!r}")
    logger.info("loaded %d clips and %d triplets from %s", len(clip_list), len(triplets), manifest_path)
    return clip_list, triplets


def _parse_clip(row: dict, row_no: int) -> ClipRecord:
    clip_id = (row.get("clip_id") or "").strip()
    media = (row.get("media") or "").strip()
    if not clip_id:
        raise SchemaError(row_no, "clip_id is empty")
    if not media:
        raise SchemaError(row_no, "media path is empty")
    try:
        foul_frame_index = int(row.get("foul_frame_index") or "")
    except ValueError:
        raise SchemaError(row_no, f"foul_frame_index is not an integer: {row.get('foul_frame_index')!r}")
    gt_foul = gt_severity = None
    if (row.get("gt_foul") or "").strip():
        try:
            gt_foul = FoulType.from_display(row["gt_foul"])
        except ValueError as exc:
            raise SchemaError(row_no, str(exc))
    if (row.get("gt_severity") or "").strip():
        try:
            gt_severity = Severity.from_display(row["gt_severity"])
        except ValueError as exc:
            raise SchemaError(row_no, str(exc))
    split = (row.get("split") or "").strip() or None
    if split not in (None, "train", "test"):
        raise SchemaError(row_no, f"split must be 'train' or 'test', got {split!r}")
    return ClipRecord(
        clip_id=clip_id, media=media, foul_frame_index=foul_frame_index,
        gt_foul=gt_foul, gt_severity=gt_severity, split=split,
    )


def _parse_triplet(row: dict, row_no: int) -> VqaTriplet:
    question = (row.get("question") or "").strip()
    answer = (row.get("answer") or "").strip()
    annotator = (row.get("annotator_id") or "").strip()
    if not question:
        raise SchemaError(row_no, "question is empty")
    if not answer:
        raise SchemaError(row_no, "answer is empty")
    if not annotator:
        raise SchemaError(row_no, "annotator_id is empty")
    games = (row.get("games_officiated") or "").strip()
    games_officiated = None
    if games:
        try:
            games_officiated = int(games)
        except ValueError:
            raise SchemaError(row_no, f"games_officiated is not an integer: {games!r}")
    return VqaTriplet(
        clip_id=row["clip_id"].strip(),
        question=question,
        answer=answer,
        annotator_id=annotator,
        games_officiated=games_officiated,
        original_language=(row.get("original_language") or "").strip() or None,
    )


def _check_consistent(existing: ClipRecord, new: ClipRecord, first_row: int, row_no: int) -> None:
    for attr in ("media", "foul_frame_index", "gt_foul", "gt_severity", "split"):
        if getattr(existing, attr) != getattr(new, attr):
            raise SchemaError(
                row_no,
                f"clip {new.clip_id!r} field {attr} disagrees with row {first_row}: "
                f"{getattr(new, attr)!r} vs {getattr(existing, attr)!r}",
            )


def write_manifest(path: Path, clips: List[ClipRecord], triplets: List[VqaTriplet]) -> Path:
    """Write a manifest; every clip must be referenced by at least one triplet."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    by_id = {c.clip_id: c for c in clips}
    for t in triplets:
        if t.clip_id not in by_id:
            raise DanglingClipError(f"triplet references unknown clip {t.clip_id!r}")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for t in triplets:
            c = by_id[t.clip_id]
            writer.writerow([
                c.clip_id,
                c.media,
                c.foul_frame_index,
                c.gt_foul.display if c.gt_foul is not None else "",
                c.gt_severity.display if c.gt_severity is not None else "",
                c.split or "",
                t.question,
                t.answer,
                t.annotator_id,
                t.games_officiated if t.games_officiated is not None else "",
                t.original_language or "",
            ])
    return path
