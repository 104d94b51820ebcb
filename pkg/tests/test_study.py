"""Blind study engine: assignment, blindness, summaries, persistence."""

import json
import random

import pytest

from refvlm.eval.study import (
    InsufficientItemsError,
    OrphanRecordError,
    RatingRecord,
    RatingStore,
    ScoreRangeError,
    SessionStore,
    StudyItem,
    StudySession,
    create_study,
    make_rating,
    study_summary,
)


def items_for(n_clips, both_sources=True):
    items = []
    for i in range(n_clips):
        items.append(StudyItem(clip_id=f"c{i}", explanation=f"human text {i}", source="human"))
        if both_sources:
            items.append(StudyItem(clip_id=f"c{i}", explanation=f"model text {i}", source="model"))
    return items


def test_each_session_has_requested_unique_clips():
    sessions = create_study(items_for(40), raters=["r1", "r2"], items_per_rater=20, seed=0)
    assert len(sessions) == 2
    for s in sessions:
        assert len(s.items) == 20
        clips = [it.clip_id for it in s.items]
        assert len(set(clips)) == 20


def test_same_seed_reproduces_assignments():
    a = create_study(items_for(30), ["r1", "r2", "r3"], items_per_rater=10, seed=42)
    b = create_study(items_for(30), ["r1", "r2", "r3"], items_per_rater=10, seed=42)
    assert [[it.clip_id for it in s.items] for s in a] == [[it.clip_id for it in s.items] for s in b]
    c = create_study(items_for(30), ["r1", "r2", "r3"], items_per_rater=10, seed=43)
    assert [[it.clip_id for it in s.items] for s in a] != [[it.clip_id for it in s.items] for s in c]


def test_insufficient_items_rejected():
    with pytest.raises(InsufficientItemsError):
        create_study(items_for(5), ["r1"], items_per_rater=20, seed=0)


def test_rater_view_never_contains_source():
    sessions = create_study(items_for(25), ["r1"], items_per_rater=10, seed=1)
    payload = sessions[0].rater_view()
    assert len(payload) == 10
    serialized = json.dumps(payload)
    assert "source" not in serialized
    assert '"human"' not in serialized
    assert '"model"' not in serialized
    assert set(payload[0].keys()) == {"item_index", "clip_id", "explanation"}


def test_invalid_source_rejected():
    with pytest.raises(ValueError):
        StudyItem(clip_id="c", explanation="x", source="robot")


def test_score_range_enforced():
    with pytest.raises(ScoreRangeError):
        RatingRecord(rater_id="r", item_index=0, score=7, timestamp=0.0)
    with pytest.raises(ScoreRangeError):
        RatingRecord(rater_id="r", item_index=0, score=0, timestamp=0.0)


def test_summary_all_fives_single_source():
    session = StudySession(rater_id="r1", items=[
        StudyItem("c0", "t", "human"), StudyItem("c1", "t", "human"),
    ])
    records = [make_rating("r1", 0, 5), make_rating("r1", 1, 5)]
    report = study_summary(records, [session])
    human = report.per_source["human"]
    assert human.mean == 5.0
    assert human.distribution_pct == (0, 0, 0, 0, 100)
    assert "model" not in report.per_source


def test_summary_matches_counting_oracle():
    rng = random.Random(7)
    sessions = create_study(items_for(30), [f"r{i}" for i in range(8)], items_per_rater=12, seed=3)
    records = []
    expected = {"human": [], "model": []}
    for s in sessions:
        for idx, item in enumerate(s.items):
            score = rng.randint(1, 5)
            records.append(make_rating(s.rater_id, idx, score))
            expected[item.source].append(score)
    report = study_summary(records, sessions)
    for src in ("human", "model"):
        vals = expected[src]
        summary = report.per_source[src]
        assert summary.n_ratings == len(vals)
        assert summary.mean == pytest.approx(sum(vals) / len(vals))
        counts = tuple(sum(1 for v in vals if v == s) for s in (1, 2, 3, 4, 5))
        assert summary.distribution_counts == counts
        assert summary.distribution_pct == tuple(int(round(100 * c / len(vals))) for c in counts)


def test_distribution_percentages_sum_within_rounding():
    rng = random.Random(0)
    sessions = create_study(items_for(25), ["r1", "r2"], items_per_rater=20, seed=5)
    records = []
    for s in sessions:
        for idx in range(len(s.items)):
            records.append(make_rating(s.rater_id, idx, rng.randint(1, 5)))
    report = study_summary(records, sessions)
    for summary in report.per_source.values():
        assert abs(sum(summary.distribution_pct) - 100) <= 2  # integer rounding slack


def test_paired_model_outscoring_fraction():
    # two clips rated under both sources: model wins on c0, loses on c1
    session = StudySession(rater_id="r1", items=[
        StudyItem("c0", "h", "human"), StudyItem("c0", "m", "model"),
        StudyItem("c1", "h", "human"), StudyItem("c1", "m", "model"),
    ])
    records = [
        make_rating("r1", 0, 2), make_rating("r1", 1, 5),
        make_rating("r1", 2, 4), make_rating("r1", 3, 3),
    ]
    report = study_summary(records, [session])
    assert report.n_paired_clips == 2
    assert report.model_outscored_fraction == pytest.approx(0.5)


def test_orphan_record_rejected():
    sessions = create_study(items_for(25), ["r1"], items_per_rater=10, seed=0)
    with pytest.raises(OrphanRecordError):
        study_summary([make_rating("ghost", 0, 4)], sessions)
    with pytest.raises(OrphanRecordError):
        study_summary([make_rating("r1", 99, 4)], sessions)


def test_rating_store_append_only_round_trip(tmp_path):
    store = RatingStore(tmp_path / "ratings.jsonl")
    a = make_rating("r1", 0, 4)
    b = make_rating("r2", 3, 1)
    store.append(a)
    store.append(b)
    loaded = store.load()
    assert loaded == [a, b]
    store.append(make_rating("r1", 1, 5))
    assert len(store.load()) == 3


def test_session_store_round_trip(tmp_path):
    sessions = create_study(items_for(25), ["r1", "r2"], items_per_rater=10, seed=0)
    store = SessionStore(tmp_path / "sessions.json")
    store.save(sessions)
    loaded = store.load()
    assert [s.rater_id for s in loaded] == ["r1", "r2"]
    assert loaded[0].items == sessions[0].items
