"""Dataset record types: clips, question-answer triplets, corpus statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from ..labels import FoulType, Severity

CANONICAL_QUESTIONS = (
    "Is it a foul or not? Why?",
    "What card would you give? Why?",
    "Does the defender stop a promising attack or a goal-scoring opportunity?",
    "Could the referee have given an advantage?",
)


@dataclass
class ClipRecord:
    clip_id: str
    media: str                     # path relative to the dataset manifest
    foul_frame_index: int
    gt_foul: Optional[FoulType] = None
    gt_severity: Optional[Severity] = None
    split: Optional[str] = None    # "train" | "test"


@dataclass(frozen=True)
class VqaTriplet:
    clip_id: str
    question: str
    answer: str
    annotator_id: str
    games_officiated: Optional[int] = None
    original_language: Optional[str] = None


@dataclass
class CorpusStats:
    total_answers: int
    total_words: int
    mean_words_per_answer: float
    min_words: int
    max_words: int
    word_frequency: Counter = field(default_factory=Counter)
    answers_per_action_mean: float = 0.0

    def top_words(self, k: int = 20):
        return self.word_frequency.most_common(k)
