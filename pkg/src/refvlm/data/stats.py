"""Corpus statistics over referee answers.

Tokenization for the word counts: lowercase, split on whitespace, strip
leading/trailing punctuation from each token, drop tokens that end up empty.
This is deliberately simple so the counts are reproducible without any NLP
dependency.
"""

from __future__ import annotations

import csv
import string
from collections import Counter
from pathlib import Path
from typing import List, Sequence

from .records import CorpusStats, VqaTriplet

_STRIP = string.punctuation + "‘’“”"


def tokenize(text: str) -> List[str]:
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(_STRIP)
        if token:
            tokens.append(token)
    return tokens


def corpus_statistics(triplets: Sequence[VqaTriplet]) -> CorpusStats:
    if not triplets:
        raise ValueError("cannot compute statistics over an empty triplet list")
    counts = Counter()
    words_per_answer = []
    actions = Counter()
    for t in triplets:
        tokens = tokenize(t.answer)
        words_per_answer.append(len(tokens))
        counts.update(tokens)
        actions[(t.clip_id, t.question)] += 1
    total_words = sum(words_per_answer)
    n = len(words_per_answer)
    return CorpusStats(
        total_answers=n,
        total_words=total_words,
        mean_words_per_answer=total_words / n,
        min_words=min(words_per_answer),
        max_words=max(words_per_answer),
        word_frequency=counts,
        answers_per_action_mean=n / len(actions),
    )


def write_word_table(stats: CorpusStats, path: Path, top_k: int = 30) -> Path:
    """Delimited word/count table, ready for a bar chart."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "count"])
        for word, count in stats.top_words(top_k):
            writer.writerow([word, count])
    return path
