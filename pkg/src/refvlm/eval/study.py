"""Blind rating-study engine.

Raters score explanations 1..5 without knowing whether a human referee or
the model wrote them. Sessions keep the source label server-side only; the
rater-facing payload of an item is exactly {item_index, clip_id, explanation}
and nothing in this module serializes the source into it.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

SOURCES = ("human", "model")
SCORE_RANGE = (1, 2, 3, 4, 5)


class InsufficientItemsError(ValueError):
    pass


class OrphanRecordError(ValueError):
    pass


class DuplicateRatingError(ValueError):
    pass


class ScoreRangeError(ValueError):
    pass


@dataclass(frozen=True)
class StudyItem:
    clip_id: str
    explanation: str
    source: str  # "human" | "model"; never exposed to raters

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")


@dataclass
class StudySession:
    rater_id: str
    items: List[StudyItem]

    def rater_view(self) -> List[dict]:
        """The only representation raters ever see; carries no source field."""
        return [
            {"item_index": i, "clip_id": item.clip_id, "explanation": item.explanation}
            for i, item in enumerate(self.items)
        ]


@dataclass(frozen=True)
class RatingRecord:
    rater_id: str
    item_index: int
    score: int
    timestamp: float

    def __post_init__(self):
        if self.score not in SCORE_RANGE:
            raise ScoreRangeError(f"score must be an integer in 1..5, got {self.score}")


def create_study(
    items: Sequence[StudyItem],
    raters: Sequence[str],
    items_per_rater: int = 20,
    seed: int = 0,
) -> List[StudySession]:
    """Assign each rater `items_per_rater` items with no duplicate clip per rater.

    Assignment and presentation order are random but deterministic under the
    seed. Multiple items may share a clip (for instance the human and the
    model explanation of the same foul); a single rater never sees the same
    clip twice.
    """
    if len(raters) != len(set(raters)):
        raise ValueError("rater ids must be unique")
    distinct_clips = {it.clip_id for it in items}
    if len(distinct_clips) < items_per_rater:
        raise InsufficientItemsError(
            f"need {items_per_rater} distinct clips per rater, have {len(distinct_clips)}"
        )
    rng = random.Random(seed)
    sessions = []
    for rater in raters:
        pool = list(items)
        rng.shuffle(pool)
        chosen: List[StudyItem] = []
        seen_clips = set()
        for item in pool:
            if item.clip_id in seen_clips:
                continue
            chosen.append(item)
            seen_clips.add(item.clip_id)
            if len(chosen) == items_per_rater:
                break
        if len(chosen) < items_per_rater:
            raise InsufficientItemsError(
                f"could not assemble {items_per_rater} distinct-clip items for rater {rater!r}"
            )
        rng.shuffle(chosen)
        sessions.append(StudySession(rater_id=rater, items=chosen))
    return sessions


@dataclass
class SourceSummary:
    n_ratings: int
    mean: float
    distribution_counts: Tuple[int, int, int, int, int]
    distribution_pct: Tuple[int, int, int, int, int]  # integer percentages


@dataclass
class StudyReport:
    per_source: Dict[str, SourceSummary]
    model_outscored_fraction: float  # paired per-clip reading
    n_paired_clips: int
    rounding_note: str = "percentages rounded to nearest integer; may not sum to exactly 100"


def study_summary(records: Sequence[RatingRecord], sessions: Sequence[StudySession]) -> StudyReport:
    """Per-source means and score distributions, plus the paired comparison.

    The paired comparison considers clips rated under both sources and
    reports the fraction where the model explanation's mean score is
    strictly higher than the human one's.
    """
    by_rater = {s.rater_id: s for s in sessions}
    scores: Dict[str, List[int]] = {src: [] for src in SOURCES}
    per_clip: Dict[Tuple[str, str], List[int]] = {}
    for rec in records:
        session = by_rater.get(rec.rater_id)
        if session is None or not (0 <= rec.item_index < len(session.items)):
            raise OrphanRecordError(
                f"rating by {rec.rater_id!r} for item {rec.item_index} joins no session item"
            )
        item = session.items[rec.item_index]
        scores[item.source].append(rec.score)
        per_clip.setdefault((item.clip_id, item.source), []).append(rec.score)

    per_source = {}
    for src in SOURCES:
        vals = scores[src]
        if not vals:
            continue
        counts = tuple(sum(1 for v in vals if v == s) for s in SCORE_RANGE)
        pct = tuple(int(round(100.0 * c / len(vals))) for c in counts)
        per_source[src] = SourceSummary(
            n_ratings=len(vals),
            mean=sum(vals) / len(vals),
            distribution_counts=counts,
            distribution_pct=pct,
        )

    paired = 0
    model_better = 0
    clip_ids = {cid for (cid, _src) in per_clip}
    for cid in clip_ids:
        human = per_clip.get((cid, "human"))
        model = per_clip.get((cid, "model"))
        if human and model:
            paired += 1
            if sum(model) / len(model) > sum(human) / len(human):
                model_better += 1
    return StudyReport(
        per_source=per_source,
        model_outscored_fraction=model_better / paired if paired else 0.0,
        n_paired_clips=paired,
    )


class RatingStore:
    """Append-only persistence for rating records, one JSON object per line."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: RatingRecord) -> None:
        line = json.dumps({
            "rater_id": record.rater_id,
            "item_index": record.item_index,
            "score": record.score,
            "timestamp": record.timestamp,
        })
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def load(self) -> List[RatingRecord]:
        if not self.path.exists():
            return []
        records = []
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                records.append(RatingRecord(
                    rater_id=d["rater_id"], item_index=int(d["item_index"]),
                    score=int(d["score"]), timestamp=float(d["timestamp"]),
                ))
        return records


class SessionStore:
    """Server-side session persistence (includes sources; never rater-facing)."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def save(self, sessions: Sequence[StudySession]) -> None:
        payload = [
            {
                "rater_id": s.rater_id,
                "items": [
                    {"clip_id": it.clip_id, "explanation": it.explanation, "source": it.source}
                    for it in s.items
                ],
            }
            for s in sessions
        ]
        self.path.write_text(json.dumps(payload, indent=1), encoding="utf-8")

    def load(self) -> List[StudySession]:
        if not self.path.exists():
            return []
        payload = json.loads(self.path.read_text(encoding="utf-8"))
        return [
            StudySession(
                rater_id=s["rater_id"],
                items=[StudyItem(**it) for it in s["items"]],
            )
            for s in payload
        ]


def make_rating(rater_id: str, item_index: int, score: int) -> RatingRecord:
    return RatingRecord(rater_id=rater_id, item_index=item_index, score=score, timestamp=time.time())
